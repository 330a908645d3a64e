"""Branch-and-bound over region assignments.

Nodes are ``NodeState`` objects; branching fixes one activity to each of
its open regions (ternary at most: decrease side / stay / increase side).
Every child is bounded eagerly by the Lagrangian relaxation before being
pushed, inheriting ``min(parent bound, own bound)`` so bounds are monotone
along any path.  Fully fixed assignments collapse to a separable concave
program solved exactly (budget only) or by dual descent with primal repair
(extra rows present).

The search is deterministic: best-bound selection with FIFO tie-breaks,
and children are explored in the fixed region order L, S, R.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .hull import check_minlp_feasible
from .instance import (Instance, Region, Solution, UnsupportedInstanceError,
                       validate)
from .relax import (LEAF_PARAMS, NODE_PARAMS, PERSPECTIVE, FixedOutcome,
                    Formulation, NodeState, RelaxParams, RelaxResult,
                    solve_fixed_assignment, solve_node_relaxation)

_INF = math.inf

BRUTE_FORCE_MAX_N = 12


@dataclass(frozen=True)
class SolveParams:
    """Search controls; defaults favor the tighter formulation."""

    formulation: Formulation = PERSPECTIVE
    time_limit: float = 100.0
    gap_tol: float = 0.0
    node_limit: Optional[int] = None
    node_selection: str = "best-bound"
    seed: int = 0  # recorded for provenance; the search itself is deterministic
    workers: int = 1
    root_params: RelaxParams = RelaxParams()
    node_params: RelaxParams = NODE_PARAMS


@dataclass
class SolveResult:
    status: str  # optimal | gap-limit | time-limit | node-limit | infeasible
    incumbent: Optional[Solution]
    objective: Optional[float]
    upper_bound: float
    gap: float
    nodes: int
    wall_time: float

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "gap-limit")


def _prune_threshold(gap_tol: float, inc_val: float) -> float:
    """Bounds at or below this cannot improve on the incumbent."""
    if not math.isfinite(inc_val):
        return -_INF  # no incumbent yet: keep everything
    return inc_val + max(gap_tol, 1e-9) * max(1.0, abs(inc_val))


def _assignment(node: NodeState) -> Tuple[Region, ...]:
    return tuple(next(iter(a)) for a in node.allowed)


def _round_regions(inst: Instance, node: NodeState, res: RelaxResult,
                   ) -> Tuple[Region, ...]:
    """Snap a fractional relaxation point to a region assignment."""
    regions: List[Region] = []
    scored = []
    for i, allowed in enumerate(node.allowed):
        if len(allowed) == 1:
            regions.append(next(iter(allowed)))
            continue
        zl, zr = res.z_L[i], res.z_R[i]
        if zl + zr <= 0.5:
            regions.append("S")
        else:
            reg = "L" if zl >= zr else "R"
            regions.append(reg)
            scored.append((zl + zr, i))
    # enforce the cardinality cap: keep the strongest indicators
    active = [i for i, r in enumerate(regions) if r != "S"]
    if len(active) > inst.m:
        fixed_active = [i for i, (r, a) in enumerate(zip(regions, node.allowed))
                        if r != "S" and len(a) == 1]
        budgetleft = inst.m - len(fixed_active)
        order = sorted(scored, key=lambda t: (-t[0], t[1]))
        keep = {i for _, i in order[:max(budgetleft, 0)]} | set(fixed_active)
        for i in active:
            if i not in keep:
                regions[i] = "S"
    return tuple(regions)


def _outcome_to_solution(inst: Instance, regions: Sequence[Region],
                         out: FixedOutcome) -> Optional[Solution]:
    """Gate a continuous-layer optimum through the exact checker."""
    if not out.feasible or out.x is None:
        return None
    # an activity sitting at zero change is really staying put
    final_regions = tuple("S" if x == 0.0 else reg
                          for x, reg in zip(out.x, regions))
    sol = Solution.from_x(inst, out.x, final_regions)
    report = check_minlp_feasible(inst, sol, tol=1e-8)
    if not report.ok:
        return None
    return sol


def round_incumbent(inst: Instance, relax: RelaxResult,
                    node: Optional[NodeState] = None) -> Optional[Solution]:
    """Try to turn a node relaxation into a feasible solution.

    The fractional point picks a region per activity (largest indicator,
    stay when both are weak, at most m nonzero), the continuous layer is
    re-optimized for that assignment, and the result is admitted only if
    the exact feasibility checker accepts it.
    """
    if node is None:
        node = NodeState.root(inst)
    regions = _round_regions(inst, node, relax)
    return _outcome_to_solution(inst, regions,
                                solve_fixed_assignment(inst, regions))


def _row_mins(inst: Instance) -> List[Tuple[Tuple[float, ...], float, float]]:
    """Coupling rows as (coeffs, rhs, tolerance scale) for interval pruning."""
    rows = [((1.0,) * inst.n, inst.budget_rhs)]
    rows.extend((ex.coeffs, ex.rhs) for ex in inst.extras)
    return [(c, b, 1e-9 * (1.0 + abs(b))) for c, b in rows]


def _node_row_infeasible(inst: Instance, rows, node: NodeState) -> bool:
    """True when some row cannot be satisfied even activity-by-activity."""
    regions = inst.regions
    for coeffs, rhs, tol in rows:
        total = 0.0
        for i, allowed in enumerate(node.allowed):
            c = coeffs[i]
            if c == 0.0:
                continue
            best = _INF
            for reg in allowed:
                lo, hi = regions[i].interval(reg)
                v = c * lo if c > 0.0 else c * hi
                if v < best:
                    best = v
            total += best
        if total > rhs + tol:
            return True
    return False


def _branch_index(node: NodeState, res: RelaxResult) -> int:
    """Most fractional combined indicator; lowest index breaks ties.

    Falls back to the lowest-index free activity when the relaxation point
    is already integral.
    """
    free = node.free_indices()
    best_i, best_frac = free[0], -1.0
    for i in free:
        zlr = res.z_L[i] + res.z_R[i]
        frac = min(zlr, 1.0 - zlr)
        if frac > best_frac + 1e-12:
            best_frac = frac
            best_i = i
    return best_i


_REGION_ORDER: Tuple[Region, ...] = ("L", "S", "R")


def branch_and_bound(inst: Instance, params: Optional[SolveParams] = None,
                     ) -> SolveResult:
    """Exact solve of the adjustment problem by Lagrangian-bounded search."""
    params = params or SolveParams()
    report = validate(inst)
    if not report.ok:
        from .instance import InvalidInstanceError
        raise InvalidInstanceError("; ".join(report.violations))
    t0 = time.perf_counter()
    form = params.formulation
    deadline = t0 + params.time_limit

    inc_sol: Optional[Solution] = None
    inc_val = -_INF
    residual_ub = -_INF  # leftover bound from leaves closed inexactly
    nodes = 0
    status: Optional[str] = None

    def elapsed() -> float:
        return time.perf_counter() - t0

    def admit(sol: Optional[Solution]) -> None:
        nonlocal inc_sol, inc_val
        if sol is not None and sol.objective > inc_val:
            inc_sol, inc_val = sol, sol.objective

    rows = _row_mins(inst)
    assignment_cache: dict = {}

    def solve_assignment(regions: Tuple[Region, ...]) -> FixedOutcome:
        out = assignment_cache.get(regions)
        if out is None:
            out = solve_fixed_assignment(inst, regions, LEAF_PARAMS)
            assignment_cache[regions] = out
        return out

    def try_round(node: NodeState, res: RelaxResult) -> None:
        regions = _round_regions(inst, node, res)
        out = solve_assignment(regions)
        if out.feasible:
            admit(_outcome_to_solution(inst, regions, out))

    def close_leaf(node: NodeState) -> None:
        nonlocal residual_ub
        if _node_row_infeasible(inst, rows, node):
            return
        regions = _assignment(node)
        out = solve_assignment(regions)
        if not out.feasible:
            return
        admit(_outcome_to_solution(inst, regions, out))
        gap = out.bound - out.value
        if gap > 1e-9 * max(1.0, abs(out.value)) and out.bound > inc_val:
            # one escalated retry before carrying the leftover bound
            out2 = solve_fixed_assignment(
                inst, regions,
                replace(LEAF_PARAMS, max_iters=1000, golden_sweeps=6,
                        golden_iters=80))
            if out2.feasible:
                admit(_outcome_to_solution(inst, regions, out2))
                best = FixedOutcome(
                    x=out2.x if out2.value > out.value else out.x,
                    value=max(out.value, out2.value),
                    bound=min(out.bound, out2.bound), feasible=True)
                assignment_cache[regions] = best
                out = best
        if out.bound > inc_val:
            residual_ub = max(residual_ub, out.bound)

    root = NodeState.root(inst)
    if root.is_leaf:
        close_leaf(root)
        ub = max(inc_val, residual_ub)
        if inc_sol is None:
            return SolveResult("infeasible", None, None, -_INF, _INF, 0, elapsed())
        gap = max(0.0, ub - inc_val) / max(1.0, abs(inc_val))
        st = "optimal" if gap <= max(params.gap_tol, 1e-9) else "gap-limit"
        return SolveResult(st, inc_sol, inc_val, ub, gap, 0, elapsed())

    root_res = solve_node_relaxation(inst, root, form, params.root_params)
    try_round(root, root_res)

    seq = itertools.count()
    depth0 = 0

    def heap_key(bound: float, depth: int, ticket: int):
        if params.node_selection == "depth-first":
            return (-depth, -bound, ticket)
        return (-bound, ticket)

    heap = [(heap_key(root_res.upper_bound, depth0, next(seq)),
             root_res.upper_bound, depth0, root, root_res)]
    pool = (ThreadPoolExecutor(max_workers=params.workers)
            if params.workers > 1 else None)

    def bound_child(child: NodeState, target: float, warm):
        node_params = params.node_params
        if math.isfinite(target):
            node_params = replace(node_params, target=target)
        return solve_node_relaxation(inst, child, form, node_params, warm=warm)

    last_popped_bound = root_res.upper_bound
    try:
        while heap:
            if elapsed() > params.time_limit:
                status = "time-limit"
                break
            if params.node_limit is not None and nodes >= params.node_limit:
                status = "node-limit"
                break
            _, bound, depth, node, res = heapq.heappop(heap)
            last_popped_bound = bound
            if bound <= _prune_threshold(params.gap_tol, inc_val):
                status = None  # exhausted within tolerance
                heap.clear()
                break
            nodes += 1
            if node.is_leaf:
                close_leaf(node)
                continue
            j = _branch_index(node, res)
            children = []
            for region in _REGION_ORDER:
                if region not in node.allowed[j]:
                    continue
                child = node.fix(j, region).saturate_cardinality(inst.m)
                if child.fixed_nonzero > inst.m:
                    continue
                if _node_row_infeasible(inst, rows, child):
                    continue
                children.append(child)
            leaves = [c for c in children if c.is_leaf]
            inner = [c for c in children if not c.is_leaf]
            for child in leaves:
                close_leaf(child)
            warm = res.multipliers
            if pool is not None and len(inner) > 1:
                results = list(pool.map(
                    lambda c: bound_child(c, inc_val, warm), inner))
            else:
                results = [bound_child(c, inc_val, warm) for c in inner]
            for child, cres in zip(inner, results):
                child_bound = min(bound, cres.upper_bound)
                try_round(child, cres)
                if child_bound > _prune_threshold(params.gap_tol, inc_val):
                    heapq.heappush(heap, (heap_key(child_bound, depth + 1, next(seq)),
                                          child_bound, depth + 1, child, cres))
    finally:
        if pool is not None:
            pool.shutdown(wait=False)

    wall = elapsed()
    if inc_sol is None:
        if status in ("time-limit", "node-limit"):
            ub = max(last_popped_bound, residual_ub)
            return SolveResult(status, None, None, ub, _INF, nodes, wall)
        return SolveResult("infeasible", None, None, -_INF, _INF, nodes, wall)

    if status in ("time-limit", "node-limit"):
        open_ub = max((entry[1] for entry in heap), default=-_INF)
        ub = max(inc_val, residual_ub, open_ub, last_popped_bound)
        gap = max(0.0, ub - inc_val) / max(1.0, abs(inc_val))
        return SolveResult(status, inc_sol, inc_val, ub, gap, nodes, wall)

    ub = max(inc_val, residual_ub)
    gap = max(0.0, ub - inc_val) / max(1.0, abs(inc_val))
    st = "optimal" if gap <= max(params.gap_tol, 1e-9) else "gap-limit"
    return SolveResult(st, inc_sol, inc_val, ub, gap, nodes, wall)


# ---------------------------------------------------------------------------
# Exhaustive reference solver


def brute_force(inst: Instance, tol: float = 1e-10,
                max_n: int = BRUTE_FORCE_MAX_N,
                chunk: int = 65536) -> SolveResult:
    """Enumerate every region assignment and solve each continuous layer.

    Exact oracle for small instances: only budget-coupled instances are
    supported, and only up to ``max_n`` activities (the assignment count
    grows as fast as ``3**n``).  Each assignment's continuous layer is
    solved by bisection on the budget multiplier to ``tol``.  The reported
    node count is the number of assignments enumerated.
    """
    t0 = time.perf_counter()
    report = validate(inst)
    if not report.ok:
        from .instance import InvalidInstanceError
        raise InvalidInstanceError("; ".join(report.violations))
    if inst.extras:
        raise UnsupportedInstanceError(
            "brute force supports budget-coupled instances only")
    if inst.n > max_n:
        raise UnsupportedInstanceError(
            f"brute force capped at {max_n} activities, got {inst.n}")

    n = inst.n
    b0 = inst.budget_rhs
    theta = np.array([a.theta for a in inst.activities])
    phi = np.array([a.phi for a in inst.activities])
    psi_sum = math.fsum(a.psi for a in inst.activities)

    options: List[List[Tuple[Region, float, float]]] = []
    for rb in inst.regions:
        opts: List[Tuple[Region, float, float]] = [("S", 0.0, 0.0)]
        if inst.m > 0 and rb.L is not None:
            opts.append(("L",) + rb.L)
        if inst.m > 0 and rb.R is not None:
            opts.append(("R",) + rb.R)
        options.append(opts)
    radices = [len(o) for o in options]
    total = 1
    for r in radices:
        total *= r
    lo_opts = [np.array([t[1] for t in o]) for o in options]
    hi_opts = [np.array([t[2] for t in o]) for o in options]

    span = max(max(abs(a.l - a.s), abs(a.u - a.s)) for a in inst.activities)
    lam_top = max(1.0, float(phi.max()) + 2.0 * float((-theta).max()) * span + 1.0)
    neg2theta = -2.0 * theta  # zero entries flagged below
    is_quad = theta < 0.0

    def batch_x(lam: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        # lam: (B, 1); returns the inner argmax per activity
        x = np.where(is_quad,
                     (phi - lam) / np.where(is_quad, neg2theta, 1.0),
                     np.where(phi - lam > 0.0, hi, lo))
        return np.clip(x, lo, hi)

    best_val = -_INF
    best_code: Optional[np.ndarray] = None
    candidates: List[Tuple[float, Tuple[int, ...]]] = []

    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        rem = idx
        code = np.empty((idx.size, n), dtype=np.int8)
        for i in range(n - 1, -1, -1):
            code[:, i] = rem % radices[i]
            rem = rem // radices[i]
        lo = np.empty((idx.size, n))
        hi = np.empty((idx.size, n))
        for i in range(n):
            lo[:, i] = lo_opts[i][code[:, i]]
            hi[:, i] = hi_opts[i][code[:, i]]
        feasible = ((code != 0).sum(axis=1) <= inst.m) & (lo.sum(axis=1) <= b0)

        zero = np.zeros((idx.size, 1))
        x = batch_x(zero, lo, hi)
        need = x.sum(axis=1) > b0
        if need.any():
            lam_lo = np.zeros(idx.size)
            lam_hi = np.full(idx.size, lam_top)
            for _ in range(100):
                mid = 0.5 * (lam_lo + lam_hi)
                xs = batch_x(mid[:, None], lo, hi)
                over = xs.sum(axis=1) > b0
                lam_lo = np.where(over, mid, lam_lo)
                lam_hi = np.where(over, lam_hi, mid)
            x_b = batch_x(lam_hi[:, None], lo, hi)
            x = np.where(need[:, None], x_b, x)
        vals = (theta * x * x + phi * x).sum(axis=1)
        vals = np.where(feasible, vals, -_INF)
        order = np.argsort(vals)[::-1][:32]
        for j in order:
            if vals[j] == -_INF:
                break
            candidates.append((float(vals[j]), tuple(int(c) for c in code[j])))

    candidates.sort(key=lambda t: -t[0])
    best_sol_val = -_INF
    best: Optional[Tuple[Tuple[float, ...], Tuple[Region, ...], float]] = None
    from .relax import _budget_solve  # exact polish for the short list
    for approx, code in candidates[:64]:
        if approx < best_sol_val - 1e-6 * max(1.0, abs(best_sol_val)):
            break
        regions = tuple(options[i][c][0] for i, c in enumerate(code))
        lo = [options[i][c][1] for i, c in enumerate(code)]
        hi = [options[i][c][2] for i, c in enumerate(code)]
        out = _budget_solve(list(theta), list(phi), lo, hi, b0, tol=tol)
        if out is None:
            continue
        xs, value, _ = out
        value += psi_sum
        if value > best_sol_val:
            best_sol_val = value
            best = (tuple(xs), regions, value)
    wall = time.perf_counter() - t0
    if best is None:
        return SolveResult("infeasible", None, None, -_INF, _INF, total, wall)
    xs, regions, _ = best
    final_regions = tuple("S" if x == 0.0 else reg
                          for x, reg in zip(xs, regions))
    sol = Solution.from_x(inst, xs, final_regions)
    return SolveResult("optimal", sol, sol.objective, sol.objective, 0.0,
                       total, wall)
