"""Game instances: underlying topology, budgets, allocation profiles, and file I/O.

Agent indices are 1-based in documents and CLI output, 0-based everywhere in
the Python API; the parser/serializer is the only place that converts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

# Max-budget classification treats budgets within this of B_M as maximal.
BUDGET_EQ_TOL = 1e-12


class KatzforgeError(Exception):
    """Base class for errors raised by this package."""


class ParseError(KatzforgeError, ValueError):
    """Malformed instance or allocation document."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class FeasibilityError(KatzforgeError, ValueError):
    """An allocation violates the support or budget constraints."""


def _philox(seed: int) -> np.random.Generator:
    # Counter-based 64-bit generator: bit-reproducible across platforms.
    return np.random.Generator(np.random.Philox(seed))


@dataclass(frozen=True)
class UnderlyingTopology:
    """Unweighted digraph constraining who may allocate to whom.

    ``adj`` holds ordered pairs (i, j), 0-based, self-pairs permitted.
    """

    n: int
    adj: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"agent count must be positive, got {self.n}")
        object.__setattr__(self, "adj", frozenset((int(i), int(j)) for i, j in self.adj))
        for i, j in self.adj:
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={self.n}")

    @cached_property
    def neighbor_lists(self) -> tuple[tuple[int, ...], ...]:
        """Out-neighbor sets in the underlying topology, ascending per agent."""
        out: list[list[int]] = [[] for _ in range(self.n)]
        for i, j in self.adj:
            out[i].append(j)
        return tuple(tuple(sorted(js)) for js in out)

    def out_neighbors(self, i: int) -> tuple[int, ...]:
        return self.neighbor_lists[i]

    @cached_property
    def support_mask(self) -> np.ndarray:
        mask = np.zeros((self.n, self.n), dtype=bool)
        for i, j in self.adj:
            mask[i, j] = True
        mask.setflags(write=False)
        return mask

    def has_all_self_loops(self) -> bool:
        return all((i, i) in self.adj for i in range(self.n))

    def is_complete(self) -> bool:
        """Every ordered pair present, self-pairs included."""
        return len(self.adj) == self.n * self.n

    def is_symmetric(self) -> bool:
        return all((j, i) in self.adj for i, j in self.adj)


@dataclass(frozen=True)
class GameInstance:
    """Underlying topology plus per-agent resource budgets.

    Budgets must be positive; the standing bound B_i < 1 is checked by
    ``validate_instance`` (and enforced at parse time), not at construction,
    so that pre-rescale instances with larger budgets can be represented.
    """

    topology: UnderlyingTopology
    budgets: tuple[float, ...]
    name: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "budgets", tuple(float(b) for b in self.budgets))
        if len(self.budgets) != self.topology.n:
            raise ValueError(
                f"got {len(self.budgets)} budgets for n={self.topology.n} agents"
            )
        for i, b in enumerate(self.budgets):
            if not np.isfinite(b) or b <= 0:
                raise ValueError(f"budget of agent {i + 1} must be positive, got {b}")

    @property
    def n(self) -> int:
        return self.topology.n

    @cached_property
    def budget_array(self) -> np.ndarray:
        arr = np.array(self.budgets, dtype=float)
        arr.setflags(write=False)
        return arr

    @property
    def b_max(self) -> float:
        return max(self.budgets)

    def max_budget_agents(self, tol: float = BUDGET_EQ_TOL) -> tuple[int, ...]:
        bm = self.b_max
        return tuple(i for i, b in enumerate(self.budgets) if abs(b - bm) <= tol)


@dataclass(frozen=True, eq=False)
class AllocationProfile:
    """Strategy profile: nonnegative n-by-n weight matrix, row i owned by agent i."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError(f"weights must be a square matrix, got shape {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, n: int) -> AllocationProfile:
        return cls(np.zeros((n, n)))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def row(self, i: int) -> np.ndarray:
        return self.weights[i].copy()

    def with_row(self, i: int, row: Sequence[float]) -> AllocationProfile:
        w = np.array(self.weights)
        w[i, :] = row
        return AllocationProfile(w)

    def positive_edges(self) -> list[tuple[int, int]]:
        ii, jj = np.nonzero(self.weights > 0)
        return list(zip(ii.tolist(), jj.tolist()))


@dataclass(frozen=True)
class RescaleParameters:
    """Discount factor folded into the weights; after rescale the discount is 1."""

    delta: float

    def __post_init__(self):
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise ValueError(f"delta must be a positive scalar, got {self.delta}")


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_instance(g: GameInstance) -> ValidationReport:
    """Report-style check of the standing requirements: every agent needs at
    least one permitted out-edge, and budgets must sit strictly inside (0, 1)
    so the induced walk series always converges."""
    violations: list[str] = []
    for i in range(g.n):
        if not g.topology.out_neighbors(i):
            violations.append(
                f"agent {i + 1}: empty out-neighborhood in underlying topology"
                " (nonempty-neighborhood rule)"
            )
    for i, b in enumerate(g.budgets):
        if not (0 < b < 1):
            violations.append(f"agent {i + 1}: budget {b!r} outside (0, 1) (budget-bound rule)")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def require_valid(g: GameInstance) -> None:
    report = validate_instance(g)
    if not report.ok:
        raise ValueError("invalid instance: " + "; ".join(report.violations))


def is_feasible(g: GameInstance, w: AllocationProfile) -> bool:
    """True iff every row obeys the support and budget constraints."""
    if w.n != g.n:
        raise ValueError(f"profile is {w.n}x{w.n} but instance has n={g.n}")
    if np.any((w.weights > 0) & ~g.topology.support_mask):
        return False
    return bool(np.all(w.weights.sum(axis=1) <= g.budget_array))


def require_feasible(g: GameInstance, w: AllocationProfile) -> None:
    if not is_feasible(g, w):
        raise FeasibilityError("allocation profile violates support or budget constraints")


def rescale(g: GameInstance, r: RescaleParameters) -> GameInstance:
    """Scale all budgets by delta, folding the discount factor into the weights.

    Centralities are invariant: c under (B, delta) equals c under
    (delta*B, discount 1) once every profile is scaled the same way.
    """
    bm = g.b_max
    if not r.delta * bm < 1:
        raise ValueError(
            f"delta*max(B) = {r.delta * bm} is not < 1; delta must be below {1 / bm}"
        )
    return GameInstance(g.topology, tuple(r.delta * b for b in g.budgets), name=g.name)


# --- documents -------------------------------------------------------------
#
# Instance document:   {"n": int, "edges": [[i, j], ...], "budgets": [...],
#                       "name": optional string}  (agents 1-based)
# Allocation document: {"weights": [[row], ...]} dense n-by-n
# Unknown fields are rejected in both.

_INSTANCE_FIELDS = {"n", "edges", "budgets", "name"}


def _load_json(text: str, what: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON (line {exc.lineno}): {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError(f"{what} document must be a JSON object")
    return doc


def _parse_budget(value, idx: int) -> float:
    # Exact decimal strings are accepted so equal budgets stay exactly equal.
    if isinstance(value, str):
        try:
            return float(value)
        except ValueError:
            raise ParseError("not a decimal number", field=f"budgets[{idx}]") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("must be a number or decimal string", field=f"budgets[{idx}]")
    return float(value)


def parse_instance(text: str) -> GameInstance:
    """Parse and validate an instance document; rejects SA violations."""
    doc = _load_json(text, "instance")
    unknown = set(doc) - _INSTANCE_FIELDS
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    for required in ("n", "edges", "budgets"):
        if required not in doc:
            raise ParseError("missing required field", field=required)

    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError("must be a positive integer", field="n")

    edges = doc["edges"]
    if not isinstance(edges, list):
        raise ParseError("must be a list of [i, j] pairs", field="edges")
    adj: set[tuple[int, int]] = set()
    for k, e in enumerate(edges):
        if (
            not isinstance(e, list)
            or len(e) != 2
            or not all(isinstance(v, int) and not isinstance(v, bool) for v in e)
        ):
            raise ParseError("must be a pair of integers", field=f"edges[{k}]")
        i, j = e
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"agent index out of range 1..{n}", field=f"edges[{k}]")
        pair = (i - 1, j - 1)
        if pair in adj:
            raise ParseError(f"duplicate edge [{i}, {j}]", field=f"edges[{k}]")
        adj.add(pair)

    budgets_doc = doc["budgets"]
    if not isinstance(budgets_doc, list) or len(budgets_doc) != n:
        raise ParseError(f"must be a list of length n={n}", field="budgets")
    budgets = tuple(_parse_budget(v, k) for k, v in enumerate(budgets_doc))
    for k, b in enumerate(budgets):
        if not np.isfinite(b) or b <= 0:
            raise ParseError("must be positive and finite", field=f"budgets[{k}]")

    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise ParseError("must be a string", field="name")

    g = GameInstance(UnderlyingTopology(n, frozenset(adj)), budgets, name=name)
    report = validate_instance(g)
    if not report.ok:
        raise ParseError("invalid instance: " + "; ".join(report.violations))
    return g


def serialize_instance(g: GameInstance) -> str:
    """Canonical serialization: sorted edges, fixed key order, 1-based agents."""
    edges = ", ".join(f"[{i + 1}, {j + 1}]" for i, j in sorted(g.topology.adj))
    lines = [
        "{",
        f'  "n": {g.n},',
        f'  "edges": [{edges}],',
        f'  "budgets": {json.dumps(list(g.budgets))}' + ("," if g.name is not None else ""),
    ]
    if g.name is not None:
        lines.append(f'  "name": {json.dumps(g.name)}')
    lines.append("}")
    return "\n".join(lines) + "\n"


def parse_allocation(text: str, n: int) -> AllocationProfile:
    doc = _load_json(text, "allocation")
    unknown = set(doc) - {"weights"}
    if unknown:
        raise ParseError(f"unknown fields: {sorted(unknown)}")
    if "weights" not in doc:
        raise ParseError("missing required field", field="weights")
    rows = doc["weights"]
    if not isinstance(rows, list) or len(rows) != n:
        raise ParseError(f"must be a list of n={n} rows", field="weights")
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"must be a list of n={n} numbers", field=f"weights[{k}]")
    try:
        return AllocationProfile(np.array(rows, dtype=float))
    except ValueError as exc:
        raise ParseError(str(exc), field="weights") from exc


def serialize_allocation(w: AllocationProfile) -> str:
    return json.dumps({"weights": [list(map(float, row)) for row in w.weights]}, indent=2) + "\n"


def generate_random_instance(
    n: int,
    edge_density: float,
    self_loops: bool,
    budget_range: tuple[float, float],
    seed: int,
) -> GameInstance:
    """Seeded random instance generator.

    Each ordered non-self pair is kept with probability ``edge_density``;
    ``self_loops`` adds (i, i) for every agent.  Rows left empty get one
    uniformly chosen out-edge so every agent can allocate.  Budgets are
    uniform in ``budget_range``, which must sit inside (0, 1).
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    if not 0 <= edge_density <= 1:
        raise ValueError(f"edge_density must be in [0, 1], got {edge_density}")
    lo, hi = budget_range
    if not (0 < lo <= hi < 1):
        raise ValueError(f"budget_range must sit inside (0, 1), got {budget_range}")

    rng = _philox(seed)
    adj: set[tuple[int, int]] = set()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if rng.random() < edge_density:
                adj.add((i, j))
    if self_loops:
        adj.update((i, i) for i in range(n))
    for i in range(n):
        if not any(e[0] == i for e in adj):
            if n == 1:
                adj.add((0, 0))
            else:
                # uniform over the n-1 non-self targets
                j = int(rng.integers(n - 1))
                adj.add((i, j if j < i else j + 1))

    budgets = tuple(float(b) for b in rng.uniform(lo, hi, size=n))
    return GameInstance(UnderlyingTopology(n, frozenset(adj)), budgets)


def random_profile(g: GameInstance, seed: int) -> AllocationProfile:
    """Seeded random feasible profile: random support inside each agent's
    neighborhood, rows scaled to a random fraction of the budget."""
    rng = _philox(seed)
    w = np.zeros((g.n, g.n))
    for i in range(g.n):
        nbrs = g.topology.out_neighbors(i)
        picks = [j for j in nbrs if rng.random() < 0.5]
        if not picks:
            continue
        raw = rng.uniform(0.1, 1.0, size=len(picks))
        target = g.budgets[i] * rng.uniform(0.2, 0.95)
        w[i, picks] = raw * (target / raw.sum())
    return AllocationProfile(w)


def instance_digest(g: GameInstance) -> str:
    """SHA-256 of the canonical serialization, used in artifact headers."""
    import hashlib

    return hashlib.sha256(serialize_instance(g).encode("utf-8")).hexdigest()


def topology_from_edges(n: int, edges: Iterable[tuple[int, int]]) -> UnderlyingTopology:
    """Convenience constructor from 0-based edge pairs."""
    return UnderlyingTopology(n, frozenset(edges))
