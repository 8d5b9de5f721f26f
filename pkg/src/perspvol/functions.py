"""Convex functions of a linear form, ``f(x) = g(c^T x)`` with ``g(0) = 0``.

Three families are supported: powers ``t^q``, the shifted exponential
``e^t - 1`` and the superpolynomial ``(t+1)^{ln(t+1)} - 1``.
"""
from __future__ import annotations

import math
import numbers
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import CombinatorialBlowupError, DomainError, RangeError
from .geometry import BoxDomain, _as_number, _is_rational

GENERICITY_TOL = 1e-9
SUBSET_CAP = 20
SUPERMODULAR_CAP = 10

_LOG_MAX = math.log(np.finfo(float).max)


def _coeffs(c) -> tuple:
    c = tuple(_as_number(x) for x in np.atleast_1d(np.asarray(c, dtype=object)))
    if not c:
        raise DomainError("coefficient vector is empty")
    if any(x < 0 for x in c):
        raise DomainError(f"coefficients must be >= 0, got {c}")
    if any(x == 0 for x in c):
        warnings.warn(f"coefficient vector {c} has zero entries", stacklevel=3)
    return c


class LinearFormFunction:
    """Base for ``f(x) = g(c^T x)``; subclasses define ``g``."""

    kind: str
    c: tuple

    @property
    def dim(self) -> int:
        return len(self.c)

    @property
    def c_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.c])

    @property
    def homogeneity_degree(self):
        return None

    def g(self, t):
        raise NotImplementedError

    def linear_form(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"point has dimension {x.shape[-1]}, function has {self.dim}")
        return x @ self.c_array

    def __call__(self, x):
        """Evaluate at a point or a stack of points (last axis = coordinates)."""
        return self.g(self.linear_form(x))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "c": [float(x) for x in self.c]}


@dataclass(frozen=True, init=False)
class PowerLinearForm(LinearFormFunction):
    c: tuple
    q: float
    kind = "power"

    def __init__(self, c: Sequence, q):
        q = _as_number(q)
        if not q >= 1:
            raise DomainError(f"exponent q must be >= 1, got {q}")
        object.__setattr__(self, "c", _coeffs(c))
        object.__setattr__(self, "q", q)

    @property
    def homogeneity_degree(self):
        return self.q

    @property
    def integer_q(self) -> int | None:
        q = self.q
        if isinstance(q, numbers.Integral):
            return int(q)
        if float(q).is_integer():
            return int(q)
        return None

    def g(self, t):
        t = np.asarray(t, dtype=float)
        if self.integer_q is None and np.any(t < 0):
            raise DomainError(f"negative base with non-integer exponent q={self.q}")
        return t ** float(self.q)

    def exact(self, x) -> Fraction:
        """Rational evaluation for integer q and rational ``c``, ``x``."""
        if self.integer_q is None:
            raise TypeError("exact evaluation needs an integer exponent")
        t = sum(Fraction(ci) * Fraction(xi) for ci, xi in zip(self.c, x, strict=True))
        return t ** self.integer_q

    def to_dict(self) -> dict:
        return {"kind": "power", "c": [float(x) for x in self.c], "q": float(self.q)}


@dataclass(frozen=True, init=False)
class ExpLinearForm(LinearFormFunction):
    c: tuple
    kind = "exp"

    def __init__(self, c: Sequence):
        object.__setattr__(self, "c", _coeffs(c))

    def g(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t > _LOG_MAX):
            raise RangeError(f"e^t overflows binary64 at t={np.max(t):.6g}", float(np.max(t)))
        return np.expm1(t)


@dataclass(frozen=True, init=False)
class SuperPolyForm(LinearFormFunction):
    """``g(t) = (t+1)^{ln(t+1)} - 1`` on ``t >= 0``, evaluated as ``expm1(log1p(t)^2)``."""

    c: tuple
    kind = "superpoly"

    def __init__(self, c: Sequence):
        object.__setattr__(self, "c", _coeffs(c))

    def g(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise DomainError("superpolynomial form is defined on the nonnegative orthant only")
        if not np.all(np.isfinite(t)):
            raise RangeError("t + 1 overflows binary64")
        e = np.log1p(t) ** 2
        if np.any(e > _LOG_MAX):
            raise RangeError(f"(t+1)^ln(t+1) overflows binary64, exponent {np.max(e):.6g}", float(np.max(e)))
        return np.expm1(e)

    def log_g1(self, t):
        """``ln(g(t) + 1)``, usable past the overflow point of ``g``."""
        return np.log1p(np.asarray(t, dtype=float)) ** 2


FunctionSpec = PowerLinearForm | ExpLinearForm | SuperPolyForm


def evaluate(f: LinearFormFunction, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DomainError("evaluate takes a single point; call f(points) for batches")
    if isinstance(f, SuperPolyForm) and np.any(x < 0):
        raise DomainError(f"{x} is outside the nonnegative orthant")
    return float(f(x))


def homogeneity_degree(f: LinearFormFunction):
    return f.homogeneity_degree


def function_from_dict(spec: dict) -> FunctionSpec:
    kind = spec.get("kind")
    try:
        if kind == "power":
            return PowerLinearForm(spec["c"], spec["q"])
        if kind == "exp":
            return ExpLinearForm(spec["c"])
        if kind == "superpoly":
            return SuperPolyForm(spec["c"])
    except KeyError as exc:
        raise DomainError(f"function spec of kind {kind!r} is missing field {exc}") from None
    raise DomainError(f"unknown function kind {kind!r}")


def is_exact_power(f, *values) -> bool:
    """True when ``f`` is an integer power form and all inputs are rational."""
    if not isinstance(f, PowerLinearForm) or f.integer_q is None:
        return False
    if not all(_is_rational(x) for x in f.c):
        return False
    for v in values:
        items = v if isinstance(v, (tuple, list)) else (v,)
        if not all(_is_rational(x) for x in items):
            return False
    return True


# --- structural predicates ----------------------------------------------


class Genericity(NamedTuple):
    ok: bool
    witness: tuple | None

    def __bool__(self) -> bool:
        return self.ok


def subset_sums(c, cap: int = SUBSET_CAP) -> np.ndarray:
    """Sums ``sum(c[i] for i in S)`` indexed by bitmask of S (entry 0 is the empty sum)."""
    c = np.asarray(c, dtype=float)
    n = c.size
    if n > cap:
        raise CombinatorialBlowupError(f"{2**n - 1} subset sums for n={n}, above the cap n <= {cap}")
    sums = np.zeros(1)
    for x in c:
        sums = np.concatenate([sums, sums + x])
    return sums


def check_genericity(c, tol: float = GENERICITY_TOL, cap: int = SUBSET_CAP) -> Genericity:
    """Check that no nonempty subset of ``c`` sums to (nearly) zero.

    A subset S passes when ``|sum_S c| > tol * max|c|``. On failure the first
    violating subset in bitmask order is returned as a tuple of 0-based indices.
    """
    c = np.asarray(c, dtype=float)
    sums = subset_sums(c, cap)
    scale = float(np.max(np.abs(c))) if c.size else 0.0
    bad = np.flatnonzero(np.abs(sums[1:]) <= tol * scale)
    if bad.size == 0 and scale > 0:
        return Genericity(True, None)
    mask = int(bad[0]) + 1 if bad.size else 1
    return Genericity(False, tuple(i for i in range(c.size) if (mask >> i) & 1))


def vertex_values(f: LinearFormFunction, box: BoxDomain) -> np.ndarray:
    """f at the 2^d box vertices, indexed by bitmask."""
    return np.asarray(f(box.vertices()), dtype=float)


def is_supermodular_on_vertices(
    f: LinearFormFunction, box: BoxDomain, cap: int = SUPERMODULAR_CAP, slack: float = 1e-12
) -> bool:
    """Check ``f(x | y) + f(x & y) >= f(x) + f(y)`` over all pairs of box vertices.

    ``slack`` is relative to the magnitude of the four values involved.
    """
    d = box.dim
    if d != f.dim:
        raise DomainError(f"function has dimension {f.dim}, box has {d}")
    if d > cap:
        raise CombinatorialBlowupError(f"{4**d} vertex pairs for d={d}, above the cap d <= {cap}")
    F = vertex_values(f, box)
    m = np.arange(2**d)
    a, b = m[:, None], m[None, :]
    lhs = F[a | b] + F[a & b]
    rhs = F[a] + F[b]
    scale = np.abs(lhs) + np.abs(rhs)
    return bool(np.all(lhs - rhs >= -slack * np.maximum(1.0, scale)))
