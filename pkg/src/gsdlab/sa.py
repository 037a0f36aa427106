"""Simulated annealing with single-spin Metropolis updates.

Each anneal starts from a uniform random configuration and performs full
sequential sweeps with acceptance ``min(1, exp(-beta * dE))``; the inverse
temperature follows a linear profile over sweeps.  Anneals are independent:
anneal ``a`` of a run draws all of its randomness from a stream derived from
``(seed, a)``, so results are identical whether anneals run one at a time,
in vectorized batches, or across processes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, IntegrityError
from .enumerator import SolutionSet
from .instances import IsingInstance, batch_energies

_BATCH = 512
_CHUNK_BUDGET = 4_000_000  # uniforms held in memory per batch chunk


@dataclass(frozen=True)
class SaSchedule:
    """Linear inverse-temperature profile over a fixed number of sweeps."""

    sweeps: int
    beta_min: float = 0.0
    beta_max: float = 20.0

    def __post_init__(self) -> None:
        if self.sweeps < 1:
            raise InputError("sweeps must be positive")
        if not self.beta_min < self.beta_max:
            raise InputError("beta_min must be below beta_max")

    def betas(self) -> np.ndarray:
        if self.sweeps == 1:
            return np.array([self.beta_max])
        return self.beta_min + np.arange(self.sweeps) * (
            (self.beta_max - self.beta_min) / (self.sweeps - 1)
        )


@dataclass
class EmpiricalGSD:
    """Per-solution hit counts from a batch of independent anneals."""

    counts: np.ndarray  # int64, one entry per solution
    anneals: int
    ground_hits: int

    def __post_init__(self) -> None:
        if self.ground_hits != int(self.counts.sum()):
            raise IntegrityError("ground_hits != sum of counts")
        if self.ground_hits > self.anneals:
            raise IntegrityError("more hits than anneals")

    @property
    def solution_ids(self) -> list[int]:
        return list(range(len(self.counts)))

    @property
    def probabilities(self) -> np.ndarray:
        """Distribution over the ground-state manifold (conditioned on a hit)."""
        if self.ground_hits == 0:
            return np.zeros(len(self.counts))
        return self.counts / self.ground_hits

    @property
    def success_probabilities(self) -> np.ndarray:
        """Per-anneal probability of ending in each specific solution."""
        return self.counts / self.anneals


def _anneal_rng(seed: int, prefix: tuple[int, ...], index: int) -> np.random.Generator:
    if seed < 0:
        raise InputError("rng seed must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=prefix + (index,)))


def acceptance_probability(beta: float, delta_e) -> np.ndarray:
    """Metropolis rule min(1, exp(-beta * dE)), vectorized over dE."""
    return np.exp(-beta * np.maximum(delta_e, 0))


def _run_batch(
    instance: IsingInstance, schedule: SaSchedule, rngs: list[np.random.Generator]
) -> np.ndarray:
    """Run one anneal per generator; returns final configurations (R, N) int8."""
    n = instance.vertex_count
    r = len(rngs)
    state = np.empty((r, n), dtype=np.int8)
    for a, g in enumerate(rngs):
        state[a] = np.where(g.random(n) < 0.5, -1, 1)
    betas = schedule.betas()
    nbr = instance.neighbor_index
    wts = instance.neighbor_weight
    h = instance.field_vector
    chunk = max(1, _CHUNK_BUDGET // max(1, r * n))
    uniforms = np.empty((r, min(chunk, schedule.sweeps), n))
    for start in range(0, schedule.sweeps, chunk):
        nsw = min(chunk, schedule.sweeps - start)
        u = uniforms[:, :nsw, :]
        for a, g in enumerate(rngs):
            u[a] = g.random((nsw, n))
        for t in range(nsw):
            beta = betas[start + t]
            ut = u[:, t, :]
            for i in range(n):
                if len(nbr[i]):
                    local = state[:, nbr[i]].astype(np.int64) @ wts[i] + h[i]
                else:
                    local = np.full(r, h[i], dtype=np.int64)
                de = -2 * state[:, i].astype(np.int64) * local
                accept = ut[:, i] < acceptance_probability(beta, de)
                state[accept, i] = -state[accept, i]
    return state


def run_sa(instance: IsingInstance, schedule: SaSchedule, rng_seed: int) -> np.ndarray:
    """One anneal; returns the final +-1 configuration."""
    return _run_batch(instance, schedule, [_anneal_rng(rng_seed, (), 0)])[0]


def sample_gsd(
    instance: IsingInstance,
    solutions: SolutionSet,
    schedule: SaSchedule,
    n_anneals: int,
    rng_seed: int,
    spawn_prefix: tuple[int, ...] = (),
) -> EmpiricalGSD:
    """Run ``n_anneals`` independent anneals and tally ground-state hits.

    A result below the known ground energy, or at it but missing from the
    complete solution list, falsifies the enumeration and raises
    IntegrityError.
    """
    if solutions.truncated:
        raise InputError("solution set is truncated; cannot classify hits")
    if n_anneals < 0:
        raise InputError("n_anneals must be non-negative")
    index = solutions.index()
    counts = np.zeros(len(solutions), dtype=np.int64)
    for start in range(0, n_anneals, _BATCH):
        size = min(_BATCH, n_anneals - start)
        rngs = [_anneal_rng(rng_seed, spawn_prefix, start + a) for a in range(size)]
        finals = _run_batch(instance, schedule, rngs)
        energies = batch_energies(instance, finals)
        if np.any(energies < solutions.ground_energy):
            raise IntegrityError(
                "anneal found energy below the recorded ground energy; "
                "the solution enumeration is wrong"
            )
        for row, e in zip(finals, energies):
            if e == solutions.ground_energy:
                pos = index.get(row.tobytes())
                if pos is None:
                    raise IntegrityError(
                        "anneal found a ground state missing from the solution set"
                    )
                counts[pos] += 1
    return EmpiricalGSD(counts=counts, anneals=n_anneals, ground_hits=int(counts.sum()))


def tts_curve(
    instance: IsingInstance,
    solutions: SolutionSet,
    sweeps_list: list[int],
    n_anneals_per_point: int,
    rng_seed: int,
    beta_min: float = 0.0,
    beta_max: float = 20.0,
) -> tuple[np.ndarray, list[EmpiricalGSD]]:
    """Average time to reach each individual solution, per sweep count.

    Entry (i, k) is ``sweeps_k / P(solution i per anneal)``, infinite when the
    solution was never seen at that sweep count.
    """
    if list(sweeps_list) != sorted(sweeps_list):
        raise InputError("sweeps_list must be ascending")
    tts = np.empty((len(solutions), len(sweeps_list)))
    gsds = []
    for k, sweeps in enumerate(sweeps_list):
        gsd = sample_gsd(
            instance,
            solutions,
            SaSchedule(sweeps=int(sweeps), beta_min=beta_min, beta_max=beta_max),
            n_anneals_per_point,
            rng_seed,
            spawn_prefix=(k,),
        )
        p = gsd.success_probabilities
        with np.errstate(divide="ignore"):
            tts[:, k] = np.where(p > 0, sweeps / p, np.inf)
        gsds.append(gsd)
    return tts, gsds


def pilot_sweeps(
    instance: IsingInstance,
    ground_energy: int,
    grid: list[int],
    anneals_per_point: int,
    rng_seed: int,
    beta_min: float = 0.0,
    beta_max: float = 20.0,
) -> int:
    """Sweep count minimizing mean time-to-ground over a pilot grid.

    Mirrors optimizer practice: sweeps / P(any ground state) is estimated at
    each grid point and the argmin returned (smallest sweeps wins ties; the
    largest grid value is returned when no point ever hits a ground state).
    """
    best_sweeps = grid[-1]
    best_tts = np.inf
    for k, sweeps in enumerate(sorted(grid)):
        schedule = SaSchedule(sweeps=int(sweeps), beta_min=beta_min, beta_max=beta_max)
        hits = 0
        for start in range(0, anneals_per_point, _BATCH):
            size = min(_BATCH, anneals_per_point - start)
            rngs = [_anneal_rng(rng_seed, (k,), start + a) for a in range(size)]
            finals = _run_batch(instance, schedule, rngs)
            energies = batch_energies(instance, finals)
            if np.any(energies < ground_energy):
                raise IntegrityError("pilot anneal found energy below ground energy")
            hits += int(np.sum(energies == ground_energy))
        if hits:
            tts = sweeps * anneals_per_point / hits
            if tts < best_tts:
                best_tts = tts
                best_sweeps = int(sweeps)
    return best_sweeps


# ---------------------------------------------------------------------------
# file format


def save_gsd(gsd: EmpiricalGSD, path) -> None:
    lines = [f"gsd {len(gsd.counts)} {gsd.anneals} {gsd.ground_hits}"]
    for i, c in enumerate(gsd.counts):
        lines.append(f"{i} {int(c)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_gsd(path) -> EmpiricalGSD:
    with open(path) as fh:
        header = fh.readline().split()
        body = [ln.split() for ln in fh if ln.strip()]
    if len(header) != 4 or header[0] != "gsd":
        raise InputError(f"{path}: expected 'gsd <D> <N> <hits>' header")
    d, anneals, hits = int(header[1]), int(header[2]), int(header[3])
    if body and body[0][0] == "analytic":
        raise InputError(f"{path}: analytic GSD; use quantum.load_analytic_gsd")
    if len(body) != d:
        raise InputError(f"{path}: expected {d} rows, found {len(body)}")
    counts = np.zeros(d, dtype=np.int64)
    for idx, val in body:
        counts[int(idx)] = int(val)
    return EmpiricalGSD(counts=counts, anneals=anneals, ground_hits=hits)
