"""Sequential best-response dynamics, the finite-time modified variant,
schedulers, and trace recording.

Convergence is declared on the v-residual of the current profile, never on
profile stability: profiles may keep moving between tied best responses while
the centralities are already at the fixed point.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .centrality import katz_solve
from .game import DEFAULT_TOL, best_response, v_map
from .instance import AllocationProfile, GameInstance, require_feasible, require_valid

# Default step limit for standard BRD, per agent (convergence is asymptotic).
STEP_LIMIT_FACTOR = 500

ROUND_ROBIN = "round-robin"
UNIFORM_RANDOM = "uniform-random"
EXPLICIT = "explicit"

CONVERGED = "converged"
STEP_LIMIT = "step-limit"


@dataclass(frozen=True)
class Scheduler:
    """Agent-selection rule: round-robin, seeded uniform-random, or an
    explicit sequence (which carries no update-infinitely-often guarantee)."""

    kind: str
    seed: int | None = None
    sequence: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.kind not in (ROUND_ROBIN, UNIFORM_RANDOM, EXPLICIT):
            raise ValueError(f"unknown scheduler kind {self.kind!r}")
        if self.kind == UNIFORM_RANDOM and self.seed is None:
            raise ValueError("uniform-random scheduler requires a seed")
        if self.kind == EXPLICIT and not self.sequence:
            raise ValueError("explicit scheduler requires a nonempty sequence")

    @classmethod
    def round_robin(cls) -> Scheduler:
        return cls(kind=ROUND_ROBIN)

    @classmethod
    def uniform_random(cls, seed: int) -> Scheduler:
        return cls(kind=UNIFORM_RANDOM, seed=seed)

    @classmethod
    def explicit(cls, sequence: Sequence[int]) -> Scheduler:
        return cls(kind=EXPLICIT, sequence=tuple(int(i) for i in sequence))

    def start(self, n: int) -> _ScheduleState:
        return _ScheduleState(self, n)


class _ScheduleState:
    """Stateful per-run selector.  ``pick(candidates)`` restricts the draw to
    the given agents; round-robin scans forward, explicit sequences skip
    non-candidates, uniform-random draws uniformly among them."""

    def __init__(self, scheduler: Scheduler, n: int):
        self._kind = scheduler.kind
        self._n = n
        self._cursor = 0
        self._sequence = scheduler.sequence
        if self._kind == UNIFORM_RANDOM:
            # counter-based generator: identical streams on every platform
            self._rng = np.random.Generator(np.random.Philox(scheduler.seed))
        if self._sequence is not None:
            for i in self._sequence:
                if not 0 <= i < n:
                    raise ValueError(f"scheduled agent {i} out of range for n={n}")

    def pick(self, candidates: Sequence[int] | None = None) -> int | None:
        if self._kind == ROUND_ROBIN:
            allowed = None if candidates is None else set(candidates)
            for _ in range(self._n):
                i = self._cursor % self._n
                self._cursor += 1
                if allowed is None or i in allowed:
                    return i
            return None
        if self._kind == UNIFORM_RANDOM:
            pool = list(range(self._n)) if candidates is None else sorted(candidates)
            if not pool:
                return None
            return pool[int(self._rng.integers(len(pool)))]
        allowed = None if candidates is None else set(candidates)
        while self._cursor < len(self._sequence):
            i = self._sequence[self._cursor]
            self._cursor += 1
            if allowed is None or i in allowed:
                return i
        return None


@dataclass(frozen=True)
class BrdConfig:
    scheduler: Scheduler = field(default_factory=Scheduler.round_robin)
    max_steps: int | None = None  # None: 500*n for standard, unbounded for modified
    tol: float = DEFAULT_TOL
    lazy: bool = True  # skip rewriting a row that is already a best response
    mode: str = "standard"

    def __post_init__(self):
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.tol <= 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.mode not in ("standard", "modified"):
            raise ValueError(f"mode must be 'standard' or 'modified', got {self.mode!r}")


@dataclass(frozen=True)
class BrdStep:
    """One recorded state: the step-0 record carries the initial profile
    (agent and row are None); later records carry the acting agent's row."""

    step: int
    agent: int | None
    row: np.ndarray | None
    centralities: np.ndarray
    residual: float


@dataclass(frozen=True)
class BrdTrace:
    steps: tuple[BrdStep, ...]
    terminal: AllocationProfile
    status: str
    total_steps: int
    config: BrdConfig

    @property
    def n(self) -> int:
        return self.terminal.n

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def centrality_history(self) -> np.ndarray:
        return np.array([s.centralities for s in self.steps])


def _record(step: int, agent: int | None, row: np.ndarray | None, c: np.ndarray, residual: float) -> BrdStep:
    c = np.array(c)
    c.setflags(write=False)
    if row is not None:
        row = np.array(row)
        row.setflags(write=False)
    return BrdStep(step=step, agent=agent, row=row, centralities=c, residual=residual)


def select_agents_with_improvement(
    g: GameInstance, w: AllocationProfile, tol: float = DEFAULT_TOL
) -> set[int]:
    """Agents holding a strict better response: v_i(c(w)) > c_i(w) + tol."""
    require_feasible(g, w)
    c = katz_solve(w)
    gaps = v_map(g, c) - c
    return {i for i in range(g.n) if gaps[i] > tol}


def run_brd(g: GameInstance, w0: AllocationProfile, cfg: BrdConfig | None = None) -> BrdTrace:
    """Sequential BRD: the scheduled agent replaces its row with the canonical
    best response (kept as-is in lazy mode when already best).  Stops when the
    v-residual of the current profile drops to ``cfg.tol`` or at the step limit.
    """
    cfg = cfg or BrdConfig()
    require_valid(g)
    require_feasible(g, w0)

    w = w0
    c = katz_solve(w)
    gaps = v_map(g, c) - c
    residual = float(np.max(np.abs(gaps)))
    steps = [_record(0, None, None, c, residual)]
    if residual <= cfg.tol:
        return BrdTrace(tuple(steps), w, CONVERGED, 0, cfg)

    limit = cfg.max_steps if cfg.max_steps is not None else STEP_LIMIT_FACTOR * g.n
    state = cfg.scheduler.start(g.n)
    status = STEP_LIMIT
    total = 0
    for k in range(1, limit + 1):
        i = state.pick()
        if i is None:  # explicit schedule exhausted
            break
        if cfg.lazy and gaps[i] <= cfg.tol:
            row = w.row(i)
        else:
            br = best_response(g, i, w)
            row = br.canonical
            w = w.with_row(i, row)
            c = katz_solve(w)
            gaps = v_map(g, c) - c
            residual = float(np.max(np.abs(gaps)))
        steps.append(_record(k, i, row, c, residual))
        total = k
        if residual <= cfg.tol:
            status = CONVERGED
            break
    return BrdTrace(tuple(steps), w, status, total, cfg)


def run_modified_brd(
    g: GameInstance, w0: AllocationProfile, cfg: BrdConfig | None = None
) -> BrdTrace:
    """Finite-time variant: only agents with a strict better response are
    selected, and responses are restricted to the canonical single-edge
    allocation.  Each step strictly raises the acting agent's centrality, so
    the run terminates at an exact Nash verdict without a step limit."""
    cfg = cfg or BrdConfig(mode="modified")
    require_valid(g)
    require_feasible(g, w0)

    w = w0
    c = katz_solve(w)
    gaps = v_map(g, c) - c
    residual = float(np.max(np.abs(gaps)))
    steps = [_record(0, None, None, c, residual)]
    improvers = [i for i in range(g.n) if gaps[i] > cfg.tol]
    if not improvers:
        return BrdTrace(tuple(steps), w, CONVERGED, 0, cfg)

    state = cfg.scheduler.start(g.n)
    status = CONVERGED
    k = 0
    while improvers:
        if cfg.max_steps is not None and k >= cfg.max_steps:
            status = STEP_LIMIT
            break
        i = state.pick(improvers)
        if i is None:  # explicit schedule exhausted
            status = STEP_LIMIT
            break
        k += 1
        br = best_response(g, i, w)
        w = w.with_row(i, br.canonical)
        c_next = katz_solve(w)
        if not c_next[i] > c[i]:
            raise ArithmeticError(
                f"step {k}: centrality of agent {i + 1} did not strictly increase"
            )
        c = c_next
        gaps = v_map(g, c) - c
        residual = float(np.max(np.abs(gaps)))
        steps.append(_record(k, i, br.canonical, c, residual))
        improvers = [j for j in range(g.n) if gaps[j] > cfg.tol]
    return BrdTrace(tuple(steps), w, status, k, cfg)


# --- trace artifacts --------------------------------------------------------
#
# CSV: one optional '#'-prefixed metadata comment, one header row
# (step,agent,residual,c_1..c_n), floats at 17 significant digits, agents
# 1-based, blank agent on the step-0 record.


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trace_csv(trace: BrdTrace, path, meta: dict | None = None) -> None:
    n = trace.n
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if meta:
            fh.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
        writer = csv.writer(fh)
        writer.writerow(["step", "agent", "residual"] + [f"c_{j + 1}" for j in range(n)])
        for s in trace.steps:
            agent = "" if s.agent is None else str(s.agent + 1)
            writer.writerow(
                [str(s.step), agent, _fmt(s.residual)] + [_fmt(v) for v in s.centralities]
            )


def write_trace_allocations_json(trace: BrdTrace, path, meta: dict | None = None) -> None:
    """Sibling document to the CSV with the per-step allocation rows."""
    import json

    doc = {
        "meta": meta or {},
        "status": trace.status,
        "total_steps": trace.total_steps,
        "steps": [
            {
                "step": s.step,
                "agent": None if s.agent is None else s.agent + 1,
                "row": None if s.row is None else [float(v) for v in s.row],
            }
            for s in trace.steps
        ],
        "terminal_weights": [[float(v) for v in row] for row in trace.terminal.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
