"""Exact zero-temperature quantum-annealing ground-state distributions.

The interpolating Hamiltonian ``H(s) = (1-s) H_d + s H_p`` is restricted to a
perturbative subspace spanned by global-flip-symmetric pairs of computational
states: level 1 holds the classical ground states, level 2 adds every excited
state one driver move away from a ground state.  The restricted ground vector
is found by Rayleigh-quotient minimization with nonlinear conjugate gradients;
when level 1 leaves the minimizer degenerate, the level-2 problem is annealed
in ``s`` toward 1 with warm starts and the ground-state probabilities are
extrapolated to the ``s -> 1`` limit.

Two driver families are supported: the plain transverse field, and a
non-stoquastic variant that adds XX couplers matching the problem couplings
in magnitude with a seeded sign choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import (
    InputError,
    IntegrityError,
    NumericalError,
    ResourceError,
    UnresolvedDegeneracyError,
)
from .enumerator import SolutionSet
from .instances import Edge, IsingInstance, config_to_int

DEGENERACY_OVERLAP_DEFICIT = 1e-8


@dataclass(frozen=True)
class Driver:
    """Source of quantum fluctuations: ``tf`` or ``ns`` (with XX couplers)."""

    kind: str
    xx_couplings: dict[Edge, int] = field(default_factory=dict)
    sign_seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in ("tf", "ns"):
            raise InputError(f"unknown driver kind {self.kind!r}")
        if self.kind == "tf" and self.xx_couplings:
            raise InputError("transverse-field driver takes no XX couplings")


def make_driver(
    instance: IsingInstance, kind: str, sign_seed: int = 0, per_edge_signs: bool = False
) -> Driver:
    """Build a driver for ``instance``.

    For ``ns`` the XX couplings copy the problem couplings in magnitude; the
    sign is one seeded global choice (or an independent seeded choice per edge
    when ``per_edge_signs`` is set, kept available without any fidelity claim).
    """
    if kind == "tf":
        return Driver(kind="tf")
    if kind != "ns":
        raise InputError(f"unknown driver kind {kind!r}")
    rng = np.random.default_rng(sign_seed)
    edges = sorted(e for e, w in instance.couplings.items() if w != 0)
    if per_edge_signs:
        signs = {e: (1 if rng.integers(2) else -1) for e in edges}
    else:
        sign = 1 if rng.integers(2) else -1
        signs = {e: sign for e in edges}
    xx = {e: signs[e] * instance.couplings[e] for e in edges}
    return Driver(kind="ns", xx_couplings=xx, sign_seed=sign_seed)


@dataclass
class SubspaceBasis:
    """Symmetric-pair basis: one representative per global-flip pair."""

    level: int
    n_spins: int
    pair_states: list[int]  # canonical representative bitmask per pair
    origin: list[str]  # "ground_state" | "excited_reachable"
    diag_energy: np.ndarray  # classical energy per pair state
    index: dict[int, int]  # canonical representative -> basis position
    ground_pair_of_solution: list[int]  # solution index -> basis position

    @property
    def dimension(self) -> int:
        return len(self.pair_states)

    @property
    def n_ground_pairs(self) -> int:
        return sum(1 for o in self.origin if o == "ground_state")


def _canonical(x: int, mask: int) -> int:
    y = x ^ mask
    return x if x < y else y


def _int_to_array(x: int, n: int) -> np.ndarray:
    return np.array([1 if (x >> i) & 1 else -1 for i in range(n)], dtype=np.int8)


def _driver_moves(
    instance: IsingInstance, driver: Driver, state_int: int, state_arr: np.ndarray
) -> list[tuple[int, float, int]]:
    """Moves ``(target, amplitude, energy_delta)`` of one driver application.

    Single-flip deltas come from one vectorized pass over the couplings; the
    double-flip delta of an XX move adds the cross-term correction
    ``4 J_ij s_i s_j`` for flipping both ends of a coupled edge.
    """
    n = instance.vertex_count
    s = state_arr.astype(np.int64)
    local = instance.field_vector.astype(np.int64).copy()
    if instance.edge_index.size:
        ei, ej = instance.edge_index[:, 0], instance.edge_index[:, 1]
        np.add.at(local, ei, instance.edge_weight * s[ej])
        np.add.at(local, ej, instance.edge_weight * s[ei])
    de = -2 * s * local
    moves = [(state_int ^ (1 << i), -1.0, int(de[i])) for i in range(n)]
    for (i, j), w in driver.xx_couplings.items():
        cross = 4 * instance.couplings[(i, j)] * int(s[i]) * int(s[j])
        moves.append(
            (state_int ^ (1 << i) ^ (1 << j), float(w), int(de[i] + de[j]) + cross)
        )
    return moves


def build_subspace(
    instance: IsingInstance,
    solutions: SolutionSet,
    driver: Driver,
    k: int,
    dimension_cap: int = 10**6,
) -> SubspaceBasis:
    """Assemble the level-``k`` symmetric subspace over the solution manifold."""
    if k not in (1, 2):
        raise InputError("subspace level must be 1 or 2")
    if solutions.truncated:
        raise InputError("solution set is truncated")
    if instance.has_fields:
        raise InputError("symmetric pair basis requires all local fields zero")
    n = instance.vertex_count
    mask = (1 << n) - 1
    e0 = solutions.ground_energy

    sol_ints = [config_to_int(row) for row in solutions.solutions]
    ground_set = set(sol_ints)
    ground_reps = sorted({_canonical(x, mask) for x in sol_ints})
    index = {rep: pos for pos, rep in enumerate(ground_reps)}
    pair_states = list(ground_reps)
    origin = ["ground_state"] * len(ground_reps)
    diag = [e0] * len(ground_reps)

    if k == 2:
        excited: dict[int, int] = {}
        for rep in ground_reps:
            arr = _int_to_array(rep, n)
            for target, _amp, de in _driver_moves(instance, driver, rep, arr):
                if target in ground_set:
                    continue
                if de < 0:
                    raise IntegrityError("state below recorded ground energy")
                if de == 0:
                    raise IntegrityError(
                        "reachable state at ground energy missing from solution set"
                    )
                crep = _canonical(target, mask)
                if crep not in excited:
                    excited[crep] = e0 + de
        for crep in sorted(excited):
            index[crep] = len(pair_states)
            pair_states.append(crep)
            origin.append("excited_reachable")
            diag.append(excited[crep])
    if len(pair_states) > dimension_cap:
        raise ResourceError(f"basis dimension {len(pair_states)} exceeds cap")
    ground_pair = [index[_canonical(x, mask)] for x in sol_ints]
    return SubspaceBasis(
        level=k,
        n_spins=n,
        pair_states=pair_states,
        origin=origin,
        diag_energy=np.array(diag, dtype=np.float64),
        index=index,
        ground_pair_of_solution=ground_pair,
    )


@dataclass
class RestrictedHamiltonian:
    """``(1-s) * driver + s * diag`` in the symmetric-pair basis."""

    dimension: int
    diag: np.ndarray
    driver_matrix: sp.csr_matrix
    s: float

    def apply(self, x: np.ndarray) -> np.ndarray:
        return (1.0 - self.s) * (self.driver_matrix @ x) + self.s * (self.diag * x)

    def with_s(self, s: float) -> "RestrictedHamiltonian":
        if not 0.0 <= s <= 1.0:
            raise InputError("s must lie in [0, 1]")
        return RestrictedHamiltonian(
            dimension=self.dimension, diag=self.diag, driver_matrix=self.driver_matrix, s=s
        )

    def dense(self) -> np.ndarray:
        return (1.0 - self.s) * self.driver_matrix.toarray() + self.s * np.diag(self.diag)


def restrict_hamiltonian(
    instance: IsingInstance, driver: Driver, basis: SubspaceBasis, s: float
) -> RestrictedHamiltonian:
    """Matrix elements of H(s) between symmetric pair vectors.

    The element between pairs a and b is the sum of driver amplitudes from
    the representative of b onto both members of pair a; flips that map a
    state onto its own complement partner land on the diagonal.
    """
    if not 0.0 <= s <= 1.0:
        raise InputError("s must lie in [0, 1]")
    n = basis.n_spins
    mask = (1 << n) - 1
    rows: list[int] = []
    cols: list[int] = []
    vals: list[float] = []
    for b, rep in enumerate(basis.pair_states):
        arr = _int_to_array(rep, n)
        for target, amp, _de in _driver_moves(instance, driver, rep, arr):
            a = basis.index.get(_canonical(target, mask))
            if a is not None:
                rows.append(a)
                cols.append(b)
                vals.append(amp)
    m = basis.dimension
    driver_matrix = sp.coo_matrix((vals, (rows, cols)), shape=(m, m)).tocsr()
    asym = abs(driver_matrix - driver_matrix.T)
    if asym.nnz and asym.max() > 0:
        raise IntegrityError("restricted driver matrix is not symmetric")
    return RestrictedHamiltonian(
        dimension=m, diag=basis.diag_energy.copy(), driver_matrix=driver_matrix, s=s
    )


def _rayleigh(h: RestrictedHamiltonian, x: np.ndarray) -> float:
    return float(x @ h.apply(x))


def _line_minimum(a: float, b: float, c: float, f2: float, g2: float) -> float:
    """Step minimizing the Rayleigh quotient of ``x + t d`` along d.

    Coefficients: a = x'Hx, b = d'Hx, c = d'Hd, f2 = d'x, g2 = d'd with x
    normalized.  Stationary points solve (c*f2 - b*g2) t^2 + (c - a*g2) t +
    (b - a*f2) = 0.
    """
    qa = c * f2 - b * g2
    qb = c - a * g2
    qc = b - a * f2
    roots = []
    if abs(qa) > 0:
        disc = qb * qb - 4 * qa * qc
        if disc >= 0:
            sq = np.sqrt(disc)
            roots = [(-qb - sq) / (2 * qa), (-qb + sq) / (2 * qa)]
    elif abs(qb) > 0:
        roots = [-qc / qb]
    best_t, best_val = 0.0, (a, 1.0)
    for t in roots:
        if not np.isfinite(t):
            continue
        num = a + 2 * b * t + c * t * t
        den = 1.0 + 2 * f2 * t + g2 * t * t
        if den <= 0:
            continue
        if num / den < best_val[0] / best_val[1]:
            best_t, best_val = t, (num, den)
    return best_t


def _ncg(
    h: RestrictedHamiltonian,
    x0: np.ndarray,
    tol: float,
    max_iter: int,
    stall_window: int = 200,
) -> tuple[np.ndarray, float, int]:
    """Polak-Ribiere conjugate gradient on the Rayleigh quotient.

    Exact line searches keep the quotient non-increasing.  Returns when the
    gradient norm drops below ``tol`` or stops improving (machine-precision
    floor); hitting the iteration cap far from convergence is an error.
    """
    x = x0 / np.linalg.norm(x0)
    hx = h.apply(x)
    rho = float(x @ hx)
    g = 2.0 * (hx - rho * x)
    d = -g
    gnorm = float(np.linalg.norm(g))
    best_gnorm = gnorm
    since_best = 0
    it = 0
    scale = float(np.max(np.abs(h.diag))) + abs(h.driver_matrix).sum(axis=0).max() + 1.0
    while gnorm > tol and it < max_iter:
        it += 1
        hd = h.apply(d)
        t = _line_minimum(rho, float(d @ hx), float(d @ hd), float(d @ x), float(d @ d))
        if t == 0.0:
            d = -g  # restart along steepest descent
            hd = h.apply(d)
            t = _line_minimum(rho, float(d @ hx), float(d @ hd), float(d @ x), float(d @ d))
            if t == 0.0:
                break
        x = x + t * d
        x /= np.linalg.norm(x)
        hx = h.apply(x)
        new_rho = float(x @ hx)
        if new_rho > rho + 1e-9 * (1.0 + abs(rho)):
            raise NumericalError("Rayleigh quotient increased during CG")
        rho = new_rho
        g_new = 2.0 * (hx - rho * x)
        beta = max(0.0, float(g_new @ (g_new - g)) / max(float(g @ g), 1e-300))
        d = -g_new + beta * d
        g = g_new
        gnorm = float(np.linalg.norm(g))
        if gnorm < best_gnorm * 0.99:
            best_gnorm = gnorm
            since_best = 0
        else:
            since_best += 1
            if since_best >= stall_window:
                break  # stagnated at the numerical floor
    if gnorm > tol and it >= max_iter and gnorm > 1e-6 * scale:
        raise NumericalError(
            f"conjugate gradient failed to converge: gradient {gnorm:.3e} after {it} iterations"
        )
    return x, gnorm, it


def minimize_rayleigh(
    h: RestrictedHamiltonian,
    rng_seed: int,
    tol: float | None = None,
    max_iter: int = 100_000,
    x0: np.ndarray | None = None,
) -> np.ndarray:
    """Unit vector minimizing the Rayleigh quotient of the restricted H(s)."""
    if h.dimension < 1:
        raise InputError("empty Hamiltonian")
    if h.dimension == 1:
        return np.array([1.0])
    if tol is None:
        tol = 1e-12 * h.dimension
    if x0 is None:
        x0 = np.random.default_rng(rng_seed).standard_normal(h.dimension)
    x, _, _ = _ncg(h, x0, tol, max_iter)
    return x


def detect_degeneracy(
    h: RestrictedHamiltonian, rng_seed: int, tol: float | None = None
) -> bool:
    """Two minimizations from orthogonalized random starts; True when the
    resulting states are linearly independent."""
    degenerate, _ = _detect(h, rng_seed, tol)
    return degenerate


def _detect(
    h: RestrictedHamiltonian, rng_seed: int, tol: float | None = None
) -> tuple[bool, np.ndarray]:
    if h.dimension == 1:
        return False, np.array([1.0])
    if tol is None:
        tol = 1e-12 * h.dimension
    rng = np.random.default_rng(rng_seed)
    v1 = rng.standard_normal(h.dimension)
    v2 = rng.standard_normal(h.dimension)
    v2 -= (v2 @ v1) / (v1 @ v1) * v1
    x1, _, _ = _ncg(h, v1, tol, 100_000)
    x2, _, _ = _ncg(h, v2, tol, 100_000)
    overlap = abs(float(x1 @ x2))
    return overlap <= 1.0 - DEGENERACY_OVERLAP_DEFICIT, x1


@dataclass
class AnalyticGSD:
    """Exact |c_i|^2 over the solution manifold, with solver diagnostics."""

    probabilities: np.ndarray
    residual: dict

    @property
    def solution_ids(self) -> list[int]:
        return list(range(len(self.probabilities)))


@dataclass(frozen=True)
class QgsConfig:
    s_star: float = 0.1
    eps_final: float = 1e-6
    grid_points_per_decade: int = 4
    extrapolate: bool = True
    anneal_grid: bool = True  # run the warm-started CG anneal (diagnostic trace)
    cg_tol_factor: float = 1e-12  # gradient tolerance is factor * dimension
    cg_max_iter: int = 100_000
    dimension_cap: int = 10**6
    rng_seed: int = 0
    force_level2: bool = False
    degeneracy_cluster_tol: float = 1e-9
    # at-final-s outputs refine the CG vector by dense diagonalization when
    # the restricted problem is small enough; the value-based line search
    # cannot resolve quotient differences below machine epsilon of H
    polish_dense_cap: int = 4000


def _algebraic_limit(
    basis: SubspaceBasis, h: RestrictedHamiltonian, cluster_tol: float
) -> tuple[np.ndarray, int] | None:
    """Exact ``s -> 1`` ground vector of the restricted problem.

    The limit lives on the ground pairs and is fixed by the projected driver
    block at first order; when that leaves a degenerate cluster, the
    second-order operator through the excited pairs (all of which the level-2
    basis contains) breaks it.  The conjugate-gradient anneal cannot pin
    eigenvector directions whose splitting scales as ``(1-s)^2`` once it
    falls below machine resolution, so the limit is taken algebraically.
    Returns ``(vector over ground pairs, resolving order)`` or None when
    second order still leaves a degenerate cluster.
    """
    ng = basis.n_ground_pairs
    drv = h.driver_matrix
    block = drv[:ng, :ng].toarray()
    w, u = np.linalg.eigh(block)
    scale = max(1.0, float(np.abs(w).max()))
    cluster = u[:, np.abs(w - w[0]) <= cluster_tol * scale]
    if cluster.shape[1] == 1:
        return cluster[:, 0], 1
    if basis.dimension == ng:
        return None
    e0 = basis.diag_energy[0]
    cross = drv[ng:, :ng] @ cluster  # <excited | H_d | first-order ground>
    inv_gap = 1.0 / (basis.diag_energy[ng:] - e0)
    eff = -(cross * inv_gap[:, None]).T @ cross
    eff = 0.5 * (eff + eff.T)
    w2, u2 = np.linalg.eigh(eff)
    scale2 = max(1.0, float(np.abs(w2).max()))
    cluster2 = u2[:, np.abs(w2 - w2[0]) <= cluster_tol * scale2]
    if cluster2.shape[1] > 1:
        return None
    return cluster @ cluster2[:, 0], 2


def _pair_probabilities(basis: SubspaceBasis, v: np.ndarray) -> np.ndarray:
    """Distribute squared pair amplitudes over solutions, normalized over the
    ground manifold only."""
    ng = basis.n_ground_pairs
    ground_weight = float(np.sum(v[:ng] ** 2))
    if ground_weight <= 0:
        raise NumericalError("minimizer carries no weight on the ground manifold")
    p = np.array([v[pair] ** 2 for pair in basis.ground_pair_of_solution])
    return p / (2.0 * ground_weight)


def _eps_grid(start: float, stop: float, per_decade: int) -> np.ndarray:
    decades = np.log10(start / stop)
    points = max(2, int(np.ceil(decades * per_decade)) + 1)
    return np.geomspace(start, stop, points)


def quantum_gsd(
    instance: IsingInstance,
    solutions: SolutionSet,
    driver: Driver,
    config: QgsConfig = QgsConfig(),
) -> AnalyticGSD:
    """Ground-state distribution of the ideal adiabatic anneal at ``s -> 1``.

    Level-1 subspace first: when the projected driver has a unique ground
    vector the result is independent of ``s`` and read off directly.
    Otherwise the level-2 problem is annealed over a grid geometric in
    ``1 - s``, warm-starting each minimization, and the ground-manifold
    probabilities are extrapolated linearly in ``1 - s`` (or reported at the
    final grid point when ``extrapolate`` is off).
    """
    basis1 = build_subspace(instance, solutions, driver, 1, config.dimension_cap)
    h1 = restrict_hamiltonian(instance, driver, basis1, config.s_star)
    tol1 = config.cg_tol_factor * basis1.dimension
    degenerate, v = _detect(h1, config.rng_seed, tol1)
    if not degenerate and not config.force_level2:
        gnorm = float(np.linalg.norm(2.0 * (h1.apply(v) - _rayleigh(h1, v) * v)))
        return AnalyticGSD(
            probabilities=_pair_probabilities(basis1, v),
            residual={
                "grad_norm": gnorm,
                "s_used": 1.0,
                "basis_level": 1,
                "dimension": basis1.dimension,
                "extrapolated": False,
            },
        )

    basis2 = build_subspace(instance, solutions, driver, 2, config.dimension_cap)
    h2 = restrict_hamiltonian(instance, driver, basis2, config.s_star)
    tol2 = config.cg_tol_factor * basis2.dimension
    degenerate2, v = _detect(h2, config.rng_seed, tol2)
    if degenerate2:
        raise UnresolvedDegeneracyError(
            "degeneracy persists in the level-2 subspace; instance flagged"
        )
    limit = _algebraic_limit(basis2, h2, config.degeneracy_cluster_tol)
    if limit is None:
        raise UnresolvedDegeneracyError(
            "second order leaves the ground cluster degenerate; instance flagged"
        )
    limit_vec, limit_order = limit
    trace = []
    gnorm = np.nan
    h = h2
    if config.anneal_grid or not config.extrapolate:
        grid = _eps_grid(1.0 - config.s_star, config.eps_final, config.grid_points_per_decade)
        for eps in grid:
            h = h2.with_s(1.0 - float(eps))
            v, gnorm, _ = _ncg(h, v, tol2, config.cg_max_iter)
            trace.append((float(eps), _pair_probabilities(basis2, v)))
    residual = {
        "basis_level": 2,
        "dimension": basis2.dimension,
        "limit_order": limit_order,
        "extrapolated": bool(config.extrapolate),
        "grad_norm": float(gnorm),
    }
    if config.extrapolate:
        padded = np.zeros(basis2.dimension)
        padded[: basis2.n_ground_pairs] = limit_vec
        p = _pair_probabilities(basis2, padded)
        s_used = 1.0
        if trace:
            (e1, p1), (e2, p2) = trace[-2], trace[-1]
            extrap = np.clip(p2 + (p2 - p1) * (0.0 - e2) / (e2 - e1), 0.0, None)
            total = extrap.sum()
            if total > 0:
                residual["anneal_extrapolation_tv"] = float(
                    0.5 * np.abs(extrap / total - p).sum()
                )
    else:
        p = trace[-1][1]
        s_used = 1.0 - trace[-1][0]
    residual["s_used"] = s_used
    if trace:
        residual["trace"] = [(e, probs.tolist()) for e, probs in trace]
    return AnalyticGSD(probabilities=p, residual=residual)


# ---------------------------------------------------------------------------
# file format


def save_analytic_gsd(gsd: AnalyticGSD, path) -> None:
    d = len(gsd.probabilities)
    lines = [
        f"gsd {d} 0 0",
        "analytic",
        f"residual {gsd.residual.get('grad_norm', 0.0):.17g} {gsd.residual.get('s_used', 1.0):.17g}",
    ]
    for i, p in enumerate(gsd.probabilities):
        lines.append(f"{i} {p:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_analytic_gsd(path) -> AnalyticGSD:
    with open(path) as fh:
        header = fh.readline().split()
        flag = fh.readline().strip()
        residual_line = fh.readline().split()
        body = [ln.split() for ln in fh if ln.strip()]
    if len(header) != 4 or header[0] != "gsd":
        raise InputError(f"{path}: expected 'gsd <D> 0 0' header")
    if flag != "analytic":
        raise InputError(f"{path}: missing 'analytic' flag")
    if len(residual_line) != 3 or residual_line[0] != "residual":
        raise InputError(f"{path}: missing residual line")
    d = int(header[1])
    if len(body) != d:
        raise InputError(f"{path}: expected {d} rows, found {len(body)}")
    probs = np.zeros(d)
    for idx, val in body:
        probs[int(idx)] = float(val)
    return AnalyticGSD(
        probabilities=probs,
        residual={"grad_norm": float(residual_line[1]), "s_used": float(residual_line[2])},
    )
