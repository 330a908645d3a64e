"""Domain model for spend-adjustment problems.

An instance is a set of marketing activities with baseline spends, per-activity
spend bounds, a minimum magnitude for any nonzero change, quadratic revenue
curves, a relative budget cap, optional extra linear constraints, and a cap on
how many activities may change at all.  Each activity's change variable lives
in one of three regions: decrease (L), stay at zero (S), or raise (R).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Literal, Optional, Sequence, Tuple, Union

Region = Literal["L", "S", "R"]

REGION_L: Region = "L"
REGION_S: Region = "S"
REGION_R: Region = "R"


class InstanceError(Exception):
    """Base class for instance-layer failures."""


class ParseError(InstanceError):
    """Malformed JSON or a field of the wrong type."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        super().__init__(message)
        self.line = line
        self.col = col


class SchemaError(InstanceError):
    """A required field is missing or an unknown field is present."""

    def __init__(self, field_name: str, message: str):
        super().__init__(message)
        self.field = field_name


class InvalidActivityError(InstanceError):
    """Activity fields violate the basic ordering/sign rules."""


class InvalidInstanceError(InstanceError):
    """Instance failed validation where a valid one is required."""


class UnsupportedInstanceError(InstanceError):
    """Instance is outside the supported envelope of an operation."""


@dataclass(frozen=True)
class Activity:
    """One marketing activity.

    ``s`` is the baseline spend, ``[l, u]`` the admissible spend interval
    (so the change ``x`` lives in ``[l - s, u - s]``), ``delta`` the minimum
    magnitude of any nonzero change, and ``theta/phi/psi`` the coefficients
    of the concave revenue response ``theta*x^2 + phi*x + psi``.
    """

    id: str
    s: float
    l: float
    u: float
    delta: float
    theta: float
    phi: float
    psi: float

    def __post_init__(self):
        object.__setattr__(self, "id", str(self.id))
        for name in ("s", "l", "u", "delta", "theta", "phi", "psi"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def revenue(self, x: float) -> float:
        return self.theta * x * x + self.phi * x + self.psi


Interval = Tuple[float, float]


@dataclass(frozen=True)
class RegionBounds:
    """Admissible intervals for the change variable of one activity.

    ``L`` is the decrease interval ``[l-s, -delta]`` when it is nonempty,
    ``R`` the raise interval ``[delta, u-s]``; the stay region S is always
    the single point 0.  ``allow_L``/``allow_R`` record whether the matching
    indicator variable may take value 1 (domain {0,1}) or is pinned to 0.
    """

    L: Optional[Interval]
    R: Optional[Interval]
    allow_L: bool
    allow_R: bool

    @property
    def S(self) -> Interval:
        return (0.0, 0.0)

    def interval(self, region: Region) -> Optional[Interval]:
        if region == REGION_S:
            return self.S
        return self.L if region == REGION_L else self.R

    def open_regions(self) -> Tuple[Region, ...]:
        out = [REGION_S]
        if self.L is not None:
            out.insert(0, REGION_L)
        if self.R is not None:
            out.append(REGION_R)
        return tuple(out)


def compute_regions(a: Activity) -> RegionBounds:
    """Derive the L/S/R region intervals for one activity.

    The decrease region exists iff ``l - s <= -delta`` and the raise region
    iff ``delta <= u - s``; degenerate single-point regions are kept.
    """
    fields = (a.s, a.l, a.u, a.delta, a.theta, a.phi, a.psi)
    if not all(math.isfinite(v) for v in fields):
        raise InvalidActivityError(f"activity {a.id!r}: non-finite field")
    if a.l > a.s or a.s > a.u:
        raise InvalidActivityError(f"activity {a.id!r}: requires l <= s <= u")
    if a.theta > 0:
        raise InvalidActivityError(f"activity {a.id!r}: theta must be <= 0")
    if a.delta < 0:
        raise InvalidActivityError(f"activity {a.id!r}: delta must be >= 0")

    lo = a.l - a.s
    hi = a.u - a.s
    neg_delta = -a.delta if a.delta != 0 else 0.0
    L = (lo, neg_delta) if lo <= neg_delta else None
    R = (a.delta, hi) if a.delta <= hi else None
    return RegionBounds(L=L, R=R, allow_L=L is not None, allow_R=R is not None)


@dataclass(frozen=True)
class LinearConstraint:
    """A linear row over the change variables, ``coeffs @ x (le|ge) rhs``.

    Coefficients are positional and aligned with the instance's activity
    order.
    """

    coeffs: Tuple[float, ...]
    sense: Literal["le", "ge"]
    rhs: float

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "rhs", float(self.rhs))

    def normalized(self) -> "LinearConstraint":
        """Return the equivalent <= form."""
        if self.sense == "le":
            return self
        return LinearConstraint(tuple(-c for c in self.coeffs), "le", -self.rhs)


@dataclass(frozen=True)
class Instance:
    """A full spend-adjustment problem.

    The budget right-hand side is derived from ``rho``: total change must not
    exceed ``(rho - 1) * sum(s)``.  At most ``m`` activities may change.
    Construction canonicalizes: activities are sorted by id (extra-row
    coefficients are permuted to match) and >= extras are normalized to <=.
    """

    activities: Tuple[Activity, ...]
    rho: float
    m: int
    extras: Tuple[LinearConstraint, ...] = ()

    def __post_init__(self):
        acts = tuple(self.activities)
        extras = tuple(self.extras)
        order = sorted(range(len(acts)), key=lambda i: acts[i].id)
        if order != list(range(len(acts))):
            permuted = []
            for ex in extras:
                if len(ex.coeffs) == len(acts):
                    ex = LinearConstraint(tuple(ex.coeffs[i] for i in order), ex.sense, ex.rhs)
                permuted.append(ex)
            extras = tuple(permuted)
            acts = tuple(acts[i] for i in order)
        extras = tuple(ex.normalized() for ex in extras)
        object.__setattr__(self, "activities", acts)
        object.__setattr__(self, "extras", extras)
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "m", int(self.m))

    @property
    def n(self) -> int:
        return len(self.activities)

    @property
    def budget_rhs(self) -> float:
        return (self.rho - 1.0) * math.fsum(a.s for a in self.activities)

    @cached_property
    def regions(self) -> Tuple[RegionBounds, ...]:
        return tuple(compute_regions(a) for a in self.activities)


@dataclass(frozen=True)
class Solution:
    """A candidate assignment: change vector, claimed regions, new spends."""

    x: Tuple[float, ...]
    region: Tuple[Region, ...]
    objective: float
    y: Tuple[float, ...]

    @classmethod
    def from_x(cls, inst: Instance, x: Sequence[float], region: Sequence[Region]) -> "Solution":
        xs = tuple(float(v) for v in x)
        obj = math.fsum(a.revenue(v) for a, v in zip(inst.activities, xs))
        ys = tuple(a.s + v for a, v in zip(inst.activities, xs))
        return cls(x=xs, region=tuple(region), objective=obj, y=ys)


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(inst: Instance) -> ValidationReport:
    """Field-level checks; returns all violations instead of raising."""
    out = []
    if inst.n == 0:
        out.append("instance has no activities")
    seen = set()
    for a in inst.activities:
        if a.id in seen:
            out.append(f"duplicate activity id {a.id!r}")
        seen.add(a.id)
        vals = (a.s, a.l, a.u, a.delta, a.theta, a.phi, a.psi)
        if not all(math.isfinite(v) for v in vals):
            out.append(f"activity {a.id!r}: non-finite field")
            continue
        if a.l > a.s:
            out.append(f"activity {a.id!r}: l > s")
        if a.s > a.u:
            out.append(f"activity {a.id!r}: s > u")
        if a.theta > 0:
            out.append(f"activity {a.id!r}: theta > 0")
        if a.delta < 0:
            out.append(f"activity {a.id!r}: delta < 0")
    if not (math.isfinite(inst.rho) and inst.rho > 0):
        out.append("rho must be finite and positive")
    if inst.m < 0:
        out.append("cardinality cap is negative")
    elif inst.m > inst.n:
        out.append("cardinality cap exceeds activity count")
    for k, ex in enumerate(inst.extras):
        if len(ex.coeffs) != inst.n:
            out.append(f"extra {k}: expected {inst.n} coefficients, got {len(ex.coeffs)}")
        if not all(math.isfinite(c) for c in ex.coeffs) or not math.isfinite(ex.rhs):
            out.append(f"extra {k}: non-finite coefficient or rhs")
    return ValidationReport(tuple(out))


# ---------------------------------------------------------------------------
# JSON persistence.  The document layout is fixed:
#   {"rho": number, "m": integer,
#    "activities": [{"id","s","l","u","delta","theta","phi","psi"}...],
#    "extras": [{"coeffs": [number...], "sense": "le"|"ge", "rhs": number}...]}
# Canonical output sorts activities by id, keeps keys in schema order and
# prints numbers with shortest round-trip decimals.

_TOP_KEYS = ("rho", "m", "activities", "extras")
_ACT_KEYS = ("id", "s", "l", "u", "delta", "theta", "phi", "psi")
_EXTRA_KEYS = ("coeffs", "sense", "rhs")


def _require_keys(doc: dict, keys: Sequence[str], ctx: str) -> None:
    for k in keys:
        if k not in doc:
            raise SchemaError(k, f"{ctx}: missing field {k!r}")
    for k in doc:
        if k not in keys:
            raise SchemaError(k, f"{ctx}: unknown field {k!r}")


def _num(value, ctx: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(f"{ctx}: expected a number, got {type(value).__name__}")
    if isinstance(value, float) and not math.isfinite(value):
        raise ParseError(f"{ctx}: expected a finite number")
    return float(value)


def load_json(data: Union[str, bytes]) -> Instance:
    """Parse an instance document.

    Raises ParseError for malformed JSON or wrongly-typed values and
    SchemaError for missing/unknown fields.  Semantic checks (orderings,
    signs, cardinality) are left to :func:`validate`.
    """
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg} (line {e.lineno} column {e.colno})",
                         line=e.lineno, col=e.colno) from e
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    _require_keys(doc, _TOP_KEYS, "document")

    rho = _num(doc["rho"], "rho")
    m = doc["m"]
    if isinstance(m, bool) or not isinstance(m, int):
        raise ParseError("m: expected an integer")

    if not isinstance(doc["activities"], list):
        raise ParseError("activities: expected an array")
    acts = []
    for i, ad in enumerate(doc["activities"]):
        ctx = f"activities[{i}]"
        if not isinstance(ad, dict):
            raise ParseError(f"{ctx}: expected an object")
        _require_keys(ad, _ACT_KEYS, ctx)
        if not isinstance(ad["id"], str):
            raise ParseError(f"{ctx}.id: expected a string")
        acts.append(Activity(
            id=ad["id"],
            s=_num(ad["s"], f"{ctx}.s"),
            l=_num(ad["l"], f"{ctx}.l"),
            u=_num(ad["u"], f"{ctx}.u"),
            delta=_num(ad["delta"], f"{ctx}.delta"),
            theta=_num(ad["theta"], f"{ctx}.theta"),
            phi=_num(ad["phi"], f"{ctx}.phi"),
            psi=_num(ad["psi"], f"{ctx}.psi"),
        ))

    if not isinstance(doc["extras"], list):
        raise ParseError("extras: expected an array")
    extras = []
    for k, ed in enumerate(doc["extras"]):
        ctx = f"extras[{k}]"
        if not isinstance(ed, dict):
            raise ParseError(f"{ctx}: expected an object")
        _require_keys(ed, _EXTRA_KEYS, ctx)
        if not isinstance(ed["coeffs"], list):
            raise ParseError(f"{ctx}.coeffs: expected an array")
        coeffs = tuple(_num(c, f"{ctx}.coeffs[{j}]") for j, c in enumerate(ed["coeffs"]))
        sense = ed["sense"]
        if sense not in ("le", "ge"):
            raise ParseError(f"{ctx}.sense: expected 'le' or 'ge'")
        extras.append(LinearConstraint(coeffs, sense, _num(ed["rhs"], f"{ctx}.rhs")))

    inst = Instance(activities=tuple(acts), rho=rho, m=m, extras=tuple(extras))
    if validate(inst).ok:
        inst.regions  # warm the eager region cache for valid instances
    return inst


def save_json(inst: Instance) -> bytes:
    """Serialize to the canonical byte form (load(save(i)) == i)."""
    doc = {
        "rho": inst.rho,
        "m": inst.m,
        "activities": [
            {k: getattr(a, k) for k in _ACT_KEYS} for a in inst.activities
        ],
        "extras": [
            {"coeffs": list(ex.coeffs), "sense": ex.sense, "rhs": ex.rhs}
            for ex in inst.extras
        ],
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
