"""Convex-hull rows for multi-range semi-continuous variables and the two
mixed-integer model shapes built from them.

A change variable that must lie in one of several disjoint intervals or at
zero gets one indicator per interval plus hull rows
``sum_k l_k z_k <= x <= sum_k u_k z_k`` and ``sum_k z_k <= 1``.  The big-M
quadratic model keeps the concave objective as-is; the cone model replaces
each quadratic term with an epigraph variable tied to the activation level
through a rotated-cone row, which is what makes its continuous relaxation
tight at fractional activations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Literal, Optional, Sequence, Tuple

from .instance import (
    Instance,
    InvalidInstanceError,
    Interval,
    RegionBounds,
    Solution,
    validate,
)

Sense = Literal["le", "ge", "eq"]


@dataclass(frozen=True)
class RangeSet:
    """An ordered collection of closed intervals for one variable, plus the
    implicit zero point."""

    ranges: Tuple[Interval, ...]

    def __post_init__(self):
        for lo, hi in self.ranges:
            if lo > hi:
                raise ValueError(f"empty range [{lo}, {hi}]")

    @classmethod
    def from_regions(cls, rb: RegionBounds) -> "RangeSet":
        rs = []
        if rb.L is not None:
            rs.append(rb.L)
        if rb.R is not None:
            rs.append(rb.R)
        return cls(tuple(rs))


@dataclass(frozen=True)
class HullRow:
    coeffs: Tuple[Tuple[str, float], ...]
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class HullBlock:
    """Hull rows for one variable over a RangeSet.

    ``t`` is the aggregate activation indicator (``sum z = t``); callers that
    do not need it can drop the link row.
    """

    x_name: str
    z_names: Tuple[str, ...]
    t_name: str
    rows: Tuple[HullRow, ...]


def hull_block(rs: RangeSet, x_name: str = "x", z_prefix: str = "z",
               t_name: str = "t") -> HullBlock:
    """Build hull rows for ``x`` ranging over ``rs`` or pinned at zero."""
    z_names = tuple(f"{z_prefix}{k + 1}" for k in range(len(rs.ranges)))
    rows = []
    lo_terms = tuple((z, -lo) for z, (lo, _) in zip(z_names, rs.ranges))
    hi_terms = tuple((z, -hi) for z, (_, hi) in zip(z_names, rs.ranges))
    # sum l_k z_k <= x  and  x <= sum u_k z_k
    rows.append(HullRow(((x_name, 1.0),) + lo_terms, "ge", 0.0))
    rows.append(HullRow(((x_name, 1.0),) + hi_terms, "le", 0.0))
    if z_names:
        rows.append(HullRow(tuple((z, 1.0) for z in z_names), "le", 1.0))
    rows.append(HullRow(tuple((z, 1.0) for z in z_names) + ((t_name, -1.0),), "eq", 0.0))
    return HullBlock(x_name=x_name, z_names=z_names, t_name=t_name, rows=tuple(rows))


def perspective_value(theta: float, phi: float, psi: float, x: float, z: float) -> float:
    """Activation-scaled revenue ``theta*x^2/z + phi*x + psi``.

    At ``z == 0`` the only admissible point is ``x == 0`` with value ``psi``.
    """
    if z == 0.0:
        if x != 0.0:
            raise ValueError("perspective undefined at z=0 with x != 0")
        return psi
    if z < 0.0:
        raise ValueError("activation level must be nonnegative")
    return theta * x * x / z + phi * x + psi


# ---------------------------------------------------------------------------
# Model IR


@dataclass(frozen=True)
class Variable:
    name: str
    kind: Literal["continuous", "binary"]
    lb: float
    ub: float


@dataclass(frozen=True)
class LinearRow:
    name: str
    coeffs: Tuple[Tuple[str, float], ...]
    sense: Sense
    rhs: float


@dataclass(frozen=True)
class ConeRow:
    """Rotated-cone row ``e * z >= coeff * x^2`` with ``coeff >= 0``."""

    name: str
    e_var: str
    z_var: str
    x_var: str
    coeff: float


@dataclass(frozen=True)
class ModelIR:
    """Solver-independent model: variables, rows, objective pieces.

    ``activation_charges`` is a hook for flat per-activation costs; nothing
    in the current builders sets it.
    """

    name: str
    variables: Tuple[Variable, ...]
    rows: Tuple[LinearRow, ...]
    quad_obj: Tuple[Tuple[str, str, float], ...]
    lin_obj: Tuple[Tuple[str, float], ...]
    const_obj: float
    cones: Tuple[ConeRow, ...] = ()
    sense: str = "maximize"
    activation_charges: Tuple[Tuple[str, float], ...] = ()

    def variable_names(self) -> Tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def check_refs(self) -> None:
        names = set(self.variable_names())
        for row in self.rows:
            for v, _ in row.coeffs:
                if v not in names:
                    raise ValueError(f"row {row.name}: unknown variable {v}")
        for v1, v2, _ in self.quad_obj:
            if v1 not in names or v2 not in names:
                raise ValueError("quadratic objective references unknown variable")
        for v, _ in self.lin_obj:
            if v not in names:
                raise ValueError("linear objective references unknown variable")
        for cone in self.cones:
            for v in (cone.e_var, cone.z_var, cone.x_var):
                if v not in names:
                    raise ValueError(f"cone {cone.name}: unknown variable {v}")

    def objective_at(self, point: Dict[str, float]) -> float:
        total = self.const_obj
        for v1, v2, c in self.quad_obj:
            total += c * point[v1] * point[v2]
        for v, c in self.lin_obj:
            total += c * point[v]
        for v, c in self.activation_charges:
            total += c * point[v]
        return total

    def row_activity(self, row: LinearRow, point: Dict[str, float]) -> float:
        return math.fsum(c * point[v] for v, c in row.coeffs)

    def cone_slack(self, cone: ConeRow, point: Dict[str, float]) -> float:
        """Value of ``e*z - coeff*x^2`` (nonnegative when satisfied)."""
        return (point[cone.e_var] * point[cone.z_var]
                - cone.coeff * point[cone.x_var] ** 2)


def _x_bounds(rb: RegionBounds) -> Tuple[float, float]:
    lo = rb.L[0] if rb.L is not None else 0.0
    hi = rb.R[1] if rb.R is not None else 0.0
    return min(lo, 0.0), max(hi, 0.0)


def _core_rows(inst: Instance) -> Tuple[list, list]:
    """Variables and rows shared by both formulations."""
    variables = []
    rows = []
    n = inst.n
    for i, (a, rb) in enumerate(zip(inst.activities, inst.regions)):
        lo, hi = _x_bounds(rb)
        variables.append(Variable(f"x_{i}", "continuous", lo, hi))
        zl_ub = 1.0 if (rb.allow_L and inst.m > 0) else 0.0
        zr_ub = 1.0 if (rb.allow_R and inst.m > 0) else 0.0
        variables.append(Variable(f"zL_{i}", "binary", 0.0, zl_ub))
        variables.append(Variable(f"zR_{i}", "binary", 0.0, zr_ub))

    rows.append(LinearRow(
        "budget", tuple((f"x_{i}", 1.0) for i in range(n)), "le", inst.budget_rhs))
    for i, rb in enumerate(inst.regions):
        lo_terms = [(f"x_{i}", 1.0)]
        hi_terms = [(f"x_{i}", 1.0)]
        if rb.L is not None:
            lo_terms.append((f"zL_{i}", -rb.L[0]))
            hi_terms.append((f"zL_{i}", -rb.L[1]))
        if rb.R is not None:
            lo_terms.append((f"zR_{i}", -rb.R[0]))
            hi_terms.append((f"zR_{i}", -rb.R[1]))
        rows.append(LinearRow(f"rng_lo_{i}", tuple(lo_terms), "ge", 0.0))
        rows.append(LinearRow(f"rng_hi_{i}", tuple(hi_terms), "le", 0.0))
        rows.append(LinearRow(
            f"pick_{i}", ((f"zL_{i}", 1.0), (f"zR_{i}", 1.0)), "le", 1.0))
    rows.append(LinearRow(
        "card",
        tuple((f"z{side}_{i}", 1.0) for i in range(n) for side in ("L", "R")),
        "le", float(inst.m)))
    for k, ex in enumerate(inst.extras):
        rows.append(LinearRow(
            f"extra_{k}",
            tuple((f"x_{i}", c) for i, c in enumerate(ex.coeffs) if c != 0.0),
            ex.sense, ex.rhs))
    return variables, rows


def _require_valid(inst: Instance) -> None:
    rep = validate(inst)
    if not rep.ok:
        raise InvalidInstanceError("; ".join(rep.violations))


def build_miqp(inst: Instance) -> ModelIR:
    """Big-M style model: concave quadratic objective over the hull rows."""
    _require_valid(inst)
    variables, rows = _core_rows(inst)
    quad = tuple((f"x_{i}", f"x_{i}", a.theta)
                 for i, a in enumerate(inst.activities) if a.theta != 0.0)
    lin = tuple((f"x_{i}", a.phi) for i, a in enumerate(inst.activities))
    const = math.fsum(a.psi for a in inst.activities)
    ir = ModelIR(name="miqp", variables=tuple(variables), rows=tuple(rows),
                 quad_obj=quad, lin_obj=lin, const_obj=const)
    ir.check_refs()
    return ir


def build_misocp(inst: Instance) -> ModelIR:
    """Cone model: per-activity epigraph variable ``e_i`` with
    ``e_i * zLR_i >= -theta_i * x_i^2`` and a purely linear objective."""
    _require_valid(inst)
    variables, rows = _core_rows(inst)
    n = inst.n
    cones = []
    lin = []
    for i, (a, rb) in enumerate(zip(inst.activities, inst.regions)):
        active = (rb.allow_L or rb.allow_R) and inst.m > 0
        zlr_ub = 1.0 if active else 0.0
        variables.append(Variable(f"zLR_{i}", "binary", 0.0, zlr_ub))
        if a.theta < 0.0:
            variables.append(Variable(f"e_{i}", "continuous", 0.0, math.inf))
            cones.append(ConeRow(f"qc_{i}", f"e_{i}", f"zLR_{i}", f"x_{i}", -a.theta))
            lin.append((f"e_{i}", -1.0))
        else:
            # theta == 0: the cone row degenerates and e_i = 0 at any optimum
            variables.append(Variable(f"e_{i}", "continuous", 0.0, 0.0))
        lin.append((f"x_{i}", a.phi))
        rows.append(LinearRow(
            f"link_{i}",
            ((f"zL_{i}", 1.0), (f"zR_{i}", 1.0), (f"zLR_{i}", -1.0)),
            "eq", 0.0))
    const = math.fsum(a.psi for a in inst.activities)
    ir = ModelIR(name="misocp", variables=tuple(variables), rows=tuple(rows),
                 quad_obj=(), lin_obj=tuple(lin), const_obj=const,
                 cones=tuple(cones))
    ir.check_refs()
    return ir


def objective_value(inst: Instance, x: Sequence[float]) -> float:
    """Total revenue of a change vector."""
    if len(x) != inst.n:
        raise ValueError(f"expected {inst.n} changes, got {len(x)}")
    return math.fsum(a.revenue(float(v)) for a, v in zip(inst.activities, x))


@dataclass(frozen=True)
class FeasibilityReport:
    violations: Tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_minlp_feasible(inst: Instance, sol: Solution, tol: float = 1e-8) -> FeasibilityReport:
    """Reference feasibility check for a candidate solution.

    Verifies, within additive ``tol``: spend bounds, membership of each
    change in its claimed region interval, the minimum-change rule
    ``delta*z <= |x| <= M*z`` with ``M = max(|l-s|, |u-s|)``, the budget,
    the cardinality cap, the extra rows, and consistency of the stored
    objective.  This is the gate every incumbent must pass.
    """
    out = []
    if len(sol.x) != inst.n or len(sol.region) != inst.n:
        return FeasibilityReport((f"expected {inst.n} entries in x/region",))
    nonzero = 0
    for a, rb, xi, reg in zip(inst.activities, inst.regions, sol.x, sol.region):
        lo, hi = a.l - a.s, a.u - a.s
        if xi < lo - tol or xi > hi + tol:
            out.append(f"activity {a.id!r}: change {xi} outside spend bounds [{lo}, {hi}]")
        if reg not in ("L", "S", "R"):
            out.append(f"activity {a.id!r}: unknown region {reg!r}")
            continue
        interval = rb.interval(reg)
        if interval is None:
            out.append(f"activity {a.id!r}: region {reg} does not exist")
            continue
        if xi < interval[0] - tol or xi > interval[1] + tol:
            out.append(f"activity {a.id!r}: change {xi} outside region {reg} "
                       f"interval [{interval[0]}, {interval[1]}]")
        z = 0 if reg == "S" else 1
        big_m = max(abs(lo), abs(hi))
        if a.delta * z > abs(xi) + tol:
            out.append(f"activity {a.id!r}: |change| {abs(xi)} below minimum {a.delta}")
        if abs(xi) > big_m * z + tol:
            out.append(f"activity {a.id!r}: nonzero change with inactive indicator")
        nonzero += z
    total = math.fsum(sol.x)
    if total > inst.budget_rhs + tol:
        out.append(f"budget exceeded: {total} > {inst.budget_rhs}")
    if nonzero > inst.m:
        out.append(f"cardinality exceeded: {nonzero} > {inst.m}")
    for k, ex in enumerate(inst.extras):
        activity = math.fsum(c * v for c, v in zip(ex.coeffs, sol.x))
        if ex.sense == "le" and activity > ex.rhs + tol:
            out.append(f"extra {k} violated: {activity} > {ex.rhs}")
        if ex.sense == "ge" and activity < ex.rhs - tol:
            out.append(f"extra {k} violated: {activity} < {ex.rhs}")
    obj = objective_value(inst, sol.x)
    if abs(obj - sol.objective) > tol * (1.0 + abs(obj)):
        out.append(f"stored objective {sol.objective} != recomputed {obj}")
    return FeasibilityReport(tuple(out))
