"""Exhaustive ground-state enumeration by bucket elimination.

Each local term of a planted instance becomes a constraint: the list of spin
settings on its support that attain its minimum.  Bits are eliminated one at
a time by joining every constraint containing the chosen bit and projecting
the bit out; back-substitution through the saved buckets in reverse order
then lists every assignment satisfying all constraints, i.e. every global
ground state of the frustration-free Hamiltonian.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, IntegrityError, ResourceError
from .instances import PlantedInstance, batch_energies

MAX_EXHAUSTIBLE_SUPPORT = 20

# scoring functions of (unique bits, max rows, summed rows) in a bucket;
# the eliminated bit minimizes a randomly drawn score
HEURISTICS = (
    lambda u, m, s: u,
    lambda u, m, s: m,
    lambda u, m, s: s,
    lambda u, m, s: u * m,
    lambda u, m, s: u * s,
    lambda u, m, s: m + s,
)


@dataclass(frozen=True)
class Constraint:
    """Allowed +-1 settings for an ordered subset of bits."""

    bits: tuple[int, ...]
    allowed: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        for t in self.allowed:
            if len(t) != len(self.bits):
                raise InputError("allowed tuple length != number of bits")
        if len(set(self.allowed)) != len(self.allowed):
            raise InputError("duplicate allowed settings")

    @property
    def rows(self) -> int:
        return len(self.allowed)


@dataclass
class EliminationRecord:
    """Elimination order plus the per-step constraints needed for replay."""

    n_vertices: int
    order: list[int] = field(default_factory=list)
    saved_tables: list[list[Constraint]] = field(default_factory=list)
    free_bits: list[int] = field(default_factory=list)
    contradiction: bool = False


@dataclass
class SolutionSet:
    instance_id: str
    ground_energy: int
    solutions: np.ndarray  # (D, N) int8, canonically sorted rows
    truncated: bool

    def __len__(self) -> int:
        return len(self.solutions)

    def index(self) -> dict[bytes, int]:
        return {row.tobytes(): i for i, row in enumerate(np.ascontiguousarray(self.solutions))}


def terms_to_constraints(planted: PlantedInstance) -> list[Constraint]:
    """One constraint per term: its exact minimizing assignments, by exhaustion."""
    out = []
    for term in planted.terms:
        support = term.support
        size = len(support)
        if size > MAX_EXHAUSTIBLE_SUPPORT:
            raise InputError(f"term support {size} too large to exhaust")
        pos = {v: i for i, v in enumerate(support)}
        edges = [(pos[i], pos[j], w) for (i, j), w in term.couplings.items()]
        best = None
        argmin: list[tuple[int, ...]] = []
        for mask in range(1 << size):
            spins = tuple(1 if (mask >> i) & 1 else -1 for i in range(size))
            e = sum(w * spins[a] * spins[b] for a, b, w in edges)
            if best is None or e < best:
                best = e
                argmin = [spins]
            elif e == best:
                argmin.append(spins)
        if best != term.min_energy:
            raise IntegrityError(
                f"term minimum {best} != recorded min_energy {term.min_energy}"
            )
        out.append(Constraint(bits=support, allowed=tuple(argmin)))
    return out


def _join(c1: Constraint, c2: Constraint, cap_rows: int | None = None) -> Constraint:
    """Natural join: settings agreeing on every shared bit, over the bit union."""
    shared = [b for b in c1.bits if b in set(c2.bits)]
    pos1 = {b: i for i, b in enumerate(c1.bits)}
    pos2 = {b: i for i, b in enumerate(c2.bits)}
    extra = [b for b in c2.bits if b not in pos1]
    extra_pos = [pos2[b] for b in extra]
    key2 = [pos2[b] for b in shared]
    key1 = [pos1[b] for b in shared]
    index: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for row in c2.allowed:
        index.setdefault(tuple(row[i] for i in key2), []).append(row)
    merged = []
    for row in c1.allowed:
        for other in index.get(tuple(row[i] for i in key1), ()):
            merged.append(row + tuple(other[i] for i in extra_pos))
            if cap_rows is not None and len(merged) > cap_rows:
                raise ResourceError(f"joined table exceeded {cap_rows} rows")
    return Constraint(bits=c1.bits + tuple(extra), allowed=tuple(merged))


def _project_out(c: Constraint, bit: int) -> Constraint:
    keep = [i for i, b in enumerate(c.bits) if b != bit]
    rows = sorted({tuple(row[i] for i in keep) for row in c.allowed})
    return Constraint(bits=tuple(c.bits[i] for i in keep), allowed=tuple(rows))


def combine(c1: Constraint, c2: Constraint, eliminate: int) -> Constraint:
    """Join two constraints, then drop the eliminated bit.

    An empty result is a valid value signalling a contradiction.
    """
    if eliminate not in c1.bits or eliminate not in c2.bits:
        raise InputError(f"bit {eliminate} not shared by both constraints")
    return _project_out(_join(c1, c2), eliminate)


def pick_next_bit(constraints: list[Constraint], rng: np.random.Generator) -> int:
    """Choose the next bit to eliminate with one of six randomly drawn scores."""
    buckets: dict[int, list[Constraint]] = {}
    for c in constraints:
        for b in c.bits:
            buckets.setdefault(b, []).append(c)
    if not buckets:
        raise InputError("no bits remain")
    score = HEURISTICS[int(rng.integers(len(HEURISTICS)))]
    best_bit = -1
    best_score = None
    for b in sorted(buckets):
        bucket = buckets[b]
        u = len({x for c in bucket for x in c.bits})
        m = max(c.rows for c in bucket)
        s = sum(c.rows for c in bucket)
        val = score(u, m, s)
        if best_score is None or val < best_score:
            best_score = val
            best_bit = b
    return best_bit


def eliminate_all(
    constraints: list[Constraint],
    n_vertices: int,
    cap_table_size: int = 2**22,
    rng_seed: int = 0,
) -> EliminationRecord:
    """Run bucket elimination to completion (or contradiction).

    Raises ResourceError when an intermediate table exceeds ``cap_table_size``
    rows; callers retry with a fresh seed to get a different elimination
    order.
    """
    if not constraints:
        raise InputError("no constraints given")
    rng = np.random.default_rng(rng_seed)
    pool = [c for c in constraints if c.bits]
    for c in pool:
        if not c.allowed:
            rec = EliminationRecord(n_vertices=n_vertices)
            rec.contradiction = True
            return rec
    constrained = {b for c in constraints for b in c.bits}
    record = EliminationRecord(
        n_vertices=n_vertices,
        free_bits=sorted(set(range(n_vertices)) - constrained),
    )
    while pool:
        bit = pick_next_bit(pool, rng)
        bucket = [c for c in pool if bit in c.bits]
        rest = [c for c in pool if bit not in c.bits]
        record.order.append(bit)
        record.saved_tables.append(bucket)
        joined = bucket[0]
        for c in bucket[1:]:
            joined = _join(joined, c, cap_rows=cap_table_size)
        reduced = _project_out(joined, bit)
        if not reduced.allowed:
            record.contradiction = True
            return record
        if reduced.rows > cap_table_size:
            raise ResourceError(f"table exceeded {cap_table_size} rows")
        if reduced.bits:
            rest.append(reduced)
        pool = rest
    return record


def enumerate_solutions(
    record: EliminationRecord,
    cap: int,
    ground_energy: int = 0,
    instance_id: str = "",
) -> SolutionSet:
    """Back-substitute through the saved tables in reverse elimination order.

    Partial assignments are extended with every bit value consistent with all
    of a step's saved constraints; the list is clipped to ``cap`` entries at
    each step, setting ``truncated`` when that happens.  Bits absent from all
    constraints are expanded over both values at the end.
    """
    if record.contradiction:
        raise InputError("record is from a contradictory elimination")
    if cap < 1:
        raise InputError("cap must be positive")
    n = record.n_vertices
    partials: list[np.ndarray] = [np.zeros(n, dtype=np.int8)]
    truncated = False
    for bit, bucket in zip(reversed(record.order), reversed(record.saved_tables)):
        lookups = []
        for c in bucket:
            bpos = c.bits.index(bit)
            others = [i for i in range(len(c.bits)) if i != bpos]
            table: dict[tuple[int, ...], set[int]] = {}
            for row in c.allowed:
                table.setdefault(tuple(row[i] for i in others), set()).add(row[bpos])
            lookups.append(([c.bits[i] for i in others], table))
        extended = []
        for partial in partials:
            values = {-1, 1}
            for other_bits, table in lookups:
                key = tuple(int(partial[b]) for b in other_bits)
                values &= table.get(key, set())
                if not values:
                    break
            for v in sorted(values):
                nxt = partial.copy()
                nxt[bit] = v
                extended.append(nxt)
                if len(extended) > cap:
                    truncated = True
            if truncated:
                extended = extended[:cap]
        partials = extended
        if not partials:
            break
    for bit in record.free_bits:
        doubled = []
        for partial in partials:
            for v in (-1, 1):
                nxt = partial.copy()
                nxt[bit] = v
                doubled.append(nxt)
                if len(doubled) > cap:
                    truncated = True
        partials = doubled[:cap] if truncated else doubled
    if partials:
        rows = sorted(tuple(int(x) for x in p) for p in partials)
        solutions = np.array(rows, dtype=np.int8)
    else:
        solutions = np.zeros((0, n), dtype=np.int8)
    return SolutionSet(
        instance_id=instance_id,
        ground_energy=ground_energy,
        solutions=solutions,
        truncated=truncated,
    )


def find_ground_states(
    planted: PlantedInstance,
    cap: int = 500,
    rng_seed: int = 0,
    cap_table_size: int = 2**22,
    max_attempts: int = 20,
    instance_id: str = "",
) -> SolutionSet:
    """End-to-end enumeration of a planted instance's ground-state manifold.

    Retries elimination with fresh seeds when a table blows past the size cap,
    then verifies every emitted configuration against the known ground energy.
    """
    if not planted.terms:
        raise InputError("instance has no terms; every configuration is a ground state")
    constraints = terms_to_constraints(planted)
    n = planted.instance.vertex_count
    record = None
    for attempt in range(max_attempts):
        try:
            record = eliminate_all(
                constraints, n, cap_table_size=cap_table_size, rng_seed=rng_seed + attempt
            )
            break
        except ResourceError:
            continue
    if record is None:
        raise ResourceError(f"elimination exceeded table cap in all {max_attempts} attempts")
    if record.contradiction:
        raise IntegrityError("planted instance produced a contradiction")
    sols = enumerate_solutions(
        record, cap, ground_energy=planted.ground_energy, instance_id=instance_id
    )
    if len(sols):
        energies = batch_energies(planted.instance, sols.solutions)
        if np.any(energies != planted.ground_energy):
            bad = int(energies[energies != planted.ground_energy][0])
            raise IntegrityError(
                f"enumerated configuration has energy {bad}, expected {planted.ground_energy}"
            )
    return sols


# ---------------------------------------------------------------------------
# file formats


def save_constraints(constraints: list[Constraint], path) -> None:
    """Tabular text format: one line per bit, one column per allowed setting."""
    blocks = []
    for c in constraints:
        lines = []
        for i, b in enumerate(c.bits):
            vals = " ".join(f"{row[i]:d}" for row in c.allowed)
            lines.append(f"{b} {vals}")
        blocks.append("\n".join(lines))
    with open(path, "w") as fh:
        fh.write("\n\n".join(blocks) + "\n")


def load_constraints(path) -> list[Constraint]:
    with open(path) as fh:
        text = fh.read()
    constraints = []
    for block in text.split("\n\n"):
        lines = [ln for ln in block.splitlines() if ln.strip()]
        if not lines:
            continue
        bits = []
        columns: list[list[int]] = []
        for ln in lines:
            tokens = ln.split()
            bits.append(int(tokens[0]))
            vals = [int(t) for t in tokens[1:]]
            if columns and len(vals) != len(columns):
                raise InputError(f"{path}: ragged constraint block")
            if not columns:
                columns = [[] for _ in vals]
            for col, v in zip(columns, vals):
                if v not in (-1, 1):
                    raise InputError(f"{path}: setting {v} is not +-1")
                col.append(v)
        constraints.append(
            Constraint(bits=tuple(bits), allowed=tuple(tuple(col) for col in columns))
        )
    return constraints


def save_solutions(sols: SolutionSet, path) -> None:
    lines = [f"solutions {len(sols)} {sols.ground_energy} {int(sols.truncated)}"]
    for row in sols.solutions:
        lines.append(" ".join(f"{int(s):+d}" for s in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_solutions(path, instance_id: str = "") -> SolutionSet:
    with open(path) as fh:
        header = fh.readline().split()
        body = [ln.split() for ln in fh if ln.strip()]
    if len(header) != 4 or header[0] != "solutions":
        raise InputError(f"{path}: expected 'solutions <D> <E0> <truncated>' header")
    d, e0, trunc = int(header[1]), int(header[2]), bool(int(header[3]))
    if len(body) != d:
        raise InputError(f"{path}: expected {d} solution rows, found {len(body)}")
    if body:
        solutions = np.array([[1 if int(t) > 0 else -1 for t in row] for row in body], dtype=np.int8)
    else:
        solutions = np.zeros((0, 0), dtype=np.int8)
    return SolutionSet(instance_id=instance_id, ground_energy=e0, solutions=solutions, truncated=trunc)
