"""Structural verification of equilibrium networks: closed form on complete
topologies, hierarchy, SCC uniformity, condensation reporting, cycle parity.

Checks carry a three-way status: each structural claim is only asserted
under its hypotheses, so a check whose precondition fails reports
"inapplicable" rather than pass or fail.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .centrality import katz_solve
from .game import DEFAULT_TOL
from .instance import AllocationProfile, GameInstance

# Budgets are inputs and compared exactly; centralities are computed and
# compared at the game-level tolerance.
BUDGET_EQ_TOL = 1e-12
DEFAULT_CYCLE_BOUND = 12

PASS = "pass"
FAIL = "fail"
INAPPLICABLE = "inapplicable"


def tarjan_scc(n: int, successors: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan decomposition; components and members come back sorted
    so the ordering is deterministic (components by smallest member)."""
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    components: list[list[int]] = []

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ptr = work[-1]
            if ptr == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while ptr < len(successors[v]):
                u = successors[v][ptr]
                ptr += 1
                if index[u] == -1:
                    work[-1] = (v, ptr)
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    lowlink[v] = min(lowlink[v], index[u])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                components.append(sorted(comp))
    return sorted(components, key=min)


@dataclass(frozen=True)
class SccComponent:
    members: tuple[int, ...]
    is_sink: bool
    alpha: float | None = None  # common centrality when annotated and uniform
    gamma: float | None = None  # common budget when annotated and uniform
    centrality_uniform: bool | None = None
    budget_uniform: bool | None = None


@dataclass(frozen=True)
class CondensationGraph:
    components: tuple[SccComponent, ...]
    edges: frozenset[tuple[int, int]]

    @property
    def sinks(self) -> tuple[int, ...]:
        return tuple(k for k, comp in enumerate(self.components) if comp.is_sink)

    def component_of(self, agent: int) -> int:
        for k, comp in enumerate(self.components):
            if agent in comp.members:
                return k
        raise KeyError(agent)


def scc_condensation(
    w: AllocationProfile,
    budgets: tuple[float, ...] | None = None,
    centralities: np.ndarray | None = None,
    centrality_tol: float = DEFAULT_TOL,
) -> CondensationGraph:
    """Condensation of the positive-weight digraph of ``w``; when budgets and
    centralities are supplied, components are annotated with their common
    values (or flagged non-uniform)."""
    n = w.n
    successors: list[list[int]] = [
        sorted(np.nonzero(w.weights[i] > 0)[0].tolist()) for i in range(n)
    ]
    raw = tarjan_scc(n, successors)

    comp_index = {}
    for k, comp in enumerate(raw):
        for v in comp:
            comp_index[v] = k
    edges = set()
    for i in range(n):
        for j in successors[i]:
            a, b = comp_index[i], comp_index[j]
            if a != b:
                edges.add((a, b))
    has_out = {a for a, _ in edges}

    components = []
    for k, comp in enumerate(raw):
        alpha = gamma = None
        c_uniform = b_uniform = None
        if centralities is not None:
            vals = [float(centralities[v]) for v in comp]
            c_uniform = max(vals) - min(vals) <= centrality_tol
            alpha = float(np.mean(vals)) if c_uniform else None
        if budgets is not None:
            vals = [budgets[v] for v in comp]
            b_uniform = max(vals) - min(vals) <= BUDGET_EQ_TOL
            gamma = vals[0] if b_uniform else None
        components.append(
            SccComponent(
                members=tuple(comp),
                is_sink=k not in has_out,
                alpha=alpha,
                gamma=gamma,
                centrality_uniform=c_uniform,
                budget_uniform=b_uniform,
            )
        )
    return CondensationGraph(components=tuple(components), edges=frozenset(edges))


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str
    witnesses: tuple = ()
    details: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "witnesses": list(self.witnesses),
            "details": self.details,
        }


@dataclass(frozen=True)
class StructureReport:
    checks: tuple[CheckResult, ...]

    @property
    def failures(self) -> tuple[CheckResult, ...]:
        return tuple(c for c in self.checks if c.status == FAIL)

    def to_json_dict(self) -> dict:
        return {"checks": [c.to_json_dict() for c in self.checks]}


def _centralities(w: AllocationProfile, centralities: np.ndarray | None) -> np.ndarray:
    return katz_solve(w) if centralities is None else np.asarray(centralities, dtype=float)


def check_complete_topology(
    g: GameInstance,
    w: AllocationProfile,
    tol: float = DEFAULT_TOL,
    centralities: np.ndarray | None = None,
) -> CheckResult:
    """On a complete underlying topology, a Nash profile must have
    c_i = B_i / (1 - B_M), exhaust every budget, and aim every positive edge
    at a maximum-budget agent."""
    name = "complete-closed-form"
    if not g.topology.is_complete():
        return CheckResult(name, INAPPLICABLE, details={"reason": "topology not complete"})
    c = _centralities(w, centralities)
    bm = g.b_max
    expected = g.budget_array / (1.0 - bm)
    witnesses = []
    for i in range(g.n):
        if abs(c[i] - expected[i]) > tol:
            witnesses.append(
                {"agent": i + 1, "rule": "centrality", "got": float(c[i]), "want": float(expected[i])}
            )
    row_sums = w.weights.sum(axis=1)
    for i in range(g.n):
        if abs(row_sums[i] - g.budgets[i]) > BUDGET_EQ_TOL:
            witnesses.append(
                {"agent": i + 1, "rule": "budget-exhaustion", "got": float(row_sums[i])}
            )
    for i, j in w.positive_edges():
        if abs(g.budgets[j] - bm) > BUDGET_EQ_TOL:
            witnesses.append(
                {"edge": [i + 1, j + 1], "rule": "target-max-budget", "target_budget": g.budgets[j]}
            )
    status = PASS if not witnesses else FAIL
    return CheckResult(name, status, tuple(witnesses), details={"b_max": bm})


def check_hierarchy(
    g: GameInstance,
    w: AllocationProfile,
    tol: float = DEFAULT_TOL,
    centralities: np.ndarray | None = None,
) -> CheckResult:
    """With self-loops available everywhere, Nash agents only point at
    neighbors whose centrality is at least their own."""
    name = "hierarchy"
    if not g.topology.has_all_self_loops():
        return CheckResult(name, INAPPLICABLE, details={"reason": "not all agents have self-loops"})
    c = _centralities(w, centralities)
    witnesses = tuple(
        {"edge": [i + 1, j + 1], "c_source": float(c[i]), "c_target": float(c[j])}
        for i, j in w.positive_edges()
        if c[i] > c[j] + tol
    )
    return CheckResult(name, PASS if not witnesses else FAIL, witnesses)


def check_scc_uniformity(
    g: GameInstance,
    w: AllocationProfile,
    tol: float = DEFAULT_TOL,
    centralities: np.ndarray | None = None,
) -> CheckResult:
    """Members of one SCC of a Nash network share budget and centrality; an
    SCC of size >= 2 also forces its common centrality onto any SCC it points at."""
    name = "scc-uniformity"
    if not g.topology.has_all_self_loops():
        return CheckResult(name, INAPPLICABLE, details={"reason": "not all agents have self-loops"})
    c = _centralities(w, centralities)
    cond = scc_condensation(w, budgets=g.budgets, centralities=c, centrality_tol=tol)
    witnesses = []
    for k, comp in enumerate(cond.components):
        if comp.centrality_uniform is False:
            witnesses.append({"scc": k, "rule": "centrality-uniform", "agents": [v + 1 for v in comp.members]})
        if comp.budget_uniform is False:
            witnesses.append({"scc": k, "rule": "budget-uniform", "agents": [v + 1 for v in comp.members]})
    for a, b in sorted(cond.edges):
        src = cond.components[a]
        if len(src.members) < 2 or src.alpha is None:
            continue
        for v in cond.components[b].members:
            if abs(float(c[v]) - src.alpha) > tol:
                witnesses.append(
                    {
                        "scc": a,
                        "rule": "alpha-propagation",
                        "target_scc": b,
                        "agent": v + 1,
                        "alpha": src.alpha,
                        "got": float(c[v]),
                    }
                )
    return CheckResult(name, PASS if not witnesses else FAIL, tuple(witnesses))


def check_cycle_parity(
    g: GameInstance,
    w: AllocationProfile,
    tol: float = DEFAULT_TOL,
    centralities: np.ndarray | None = None,
    cycle_bound: int = DEFAULT_CYCLE_BOUND,
) -> CheckResult:
    """On an undirected underlying topology, odd cycles of a Nash network are
    budget- and centrality-uniform and even cycles are uniform on each of the
    two alternating classes.  Simple cycles are enumerated up to ``cycle_bound``."""
    name = "cycle-parity"
    if not g.topology.is_symmetric():
        return CheckResult(name, INAPPLICABLE, details={"reason": "underlying topology not symmetric"})
    c = _centralities(w, centralities)
    digraph = nx.DiGraph()
    digraph.add_nodes_from(range(g.n))
    digraph.add_edges_from(w.positive_edges())

    def class_witness(cycle, members, which):
        buds = [g.budgets[v] for v in members]
        cents = [float(c[v]) for v in members]
        if max(buds) - min(buds) > BUDGET_EQ_TOL or max(cents) - min(cents) > tol:
            return {
                "cycle": [v + 1 for v in cycle],
                "class": which,
                "agents": [v + 1 for v in members],
            }
        return None

    witnesses = []
    n_cycles = 0
    for cycle in nx.simple_cycles(digraph, length_bound=cycle_bound):
        n_cycles += 1
        if len(cycle) % 2 == 1:
            bad = class_witness(cycle, cycle, "all")
            if bad:
                witnesses.append(bad)
        else:
            for which, members in (("even", cycle[0::2]), ("odd", cycle[1::2])):
                bad = class_witness(cycle, members, which)
                if bad:
                    witnesses.append(bad)
    return CheckResult(
        name,
        PASS if not witnesses else FAIL,
        tuple(witnesses),
        details={"cycles_examined": n_cycles, "cycle_bound": cycle_bound},
    )


def run_structure_checks(
    g: GameInstance,
    w: AllocationProfile,
    tol: float = DEFAULT_TOL,
    cycle_bound: int = DEFAULT_CYCLE_BOUND,
) -> tuple[StructureReport, CondensationGraph]:
    """All applicable checks on one profile, sharing a single centrality solve."""
    c = katz_solve(w)
    checks = (
        check_complete_topology(g, w, tol, centralities=c),
        check_hierarchy(g, w, tol, centralities=c),
        check_scc_uniformity(g, w, tol, centralities=c),
        check_cycle_parity(g, w, tol, centralities=c, cycle_bound=cycle_bound),
    )
    cond = scc_condensation(w, budgets=g.budgets, centralities=c, centrality_tol=tol)
    return StructureReport(checks), cond


def export_condensation_dot(cond: CondensationGraph) -> str:
    """Graphviz DOT for the condensation; sink components are double-circled."""
    lines = ["digraph condensation {"]
    for k, comp in enumerate(cond.components):
        agents = ",".join(str(v + 1) for v in comp.members)
        label = f"SCC{k}: {agents}"
        if comp.alpha is not None:
            label += f", alpha={comp.alpha:.6g}"
        elif comp.centrality_uniform is False:
            label += ", alpha=non-uniform"
        if comp.gamma is not None:
            label += f", gamma={comp.gamma:.6g}"
        elif comp.budget_uniform is False:
            label += ", gamma=non-uniform"
        shape = "doublecircle" if comp.is_sink else "ellipse"
        lines.append(f'  scc{k} [label="{label}", shape={shape}];')
    for a, b in sorted(cond.edges):
        lines.append(f"  scc{a} -> scc{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"
