"""Volumes of the perspective and naive relaxations and their gap.

For a polytope ``Q`` in the nonnegative orthant, a convex ``f`` with
``f(0) = 0`` and a concave upper bound ``mu``::

    vol(P)  = (int_Q mu - int_Q f) / (d + 2)
    vol(P0) = int_Q mu / (d + 2) - int_0^1 z^d int_Q f(z x) dx dz
    delta   = vol(P0) - vol(P)              (does not depend on mu)
    ratio   = delta / vol(P0)
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import integration as integ
from .envelope import constant_bound, integrate_envelope
from .errors import ConsistencyError, DomainError, RangeError
from .functions import ExpLinearForm, LinearFormFunction, PowerLinearForm, SuperPolyForm
from .geometry import BoxDomain, SimplexDomain, ZonotopeDomain, zonotope_jacobian

VOLUME_FLOOR = 1e-300
NEG_SLACK = 1e-10
LOG_SAFE = 700.0


class MuKind(str, Enum):
    CONSTANT = "constant"
    ENVELOPE = "concave_envelope"

    @classmethod
    def parse(cls, value) -> "MuKind":
        if isinstance(value, cls):
            return value
        aliases = {"constant": cls.CONSTANT, "envelope": cls.ENVELOPE, "concave_envelope": cls.ENVELOPE}
        try:
            return aliases[str(value).lower()]
        except KeyError:
            raise ValueError(f"unknown upper bound kind {value!r}; use 'constant' or 'envelope'") from None


@dataclass
class RelaxationReport:
    vol_p: float
    vol_p0: float
    delta: float
    ratio: float
    mu_kind: MuKind
    formula_trace: list[str] = field(default_factory=list)

    def __post_init__(self):
        scale = max(1.0, abs(float(self.vol_p0)))
        if abs(float(self.delta) - (float(self.vol_p0) - float(self.vol_p))) > 1e-10 * scale:
            raise ConsistencyError("delta differs from volP0 - volP")
        if float(self.vol_p) < -NEG_SLACK * scale or float(self.delta) < -NEG_SLACK * scale:
            raise ConsistencyError(f"negative volume: volP={self.vol_p}, delta={self.delta}")

    def to_dict(self) -> dict:
        return {
            "volP": float(self.vol_p),
            "volP0": float(self.vol_p0),
            "delta": float(self.delta),
            "ratio": float(self.ratio),
            "muKind": self.mu_kind.value,
            "formulaTrace": list(self.formula_trace),
        }


def _check_full_dimensional(dom) -> None:
    if isinstance(dom, ZonotopeDomain) and not dom.full_dimensional:
        raise DomainError("relaxation volumes need a full-dimensional domain (A square)")


def _volume(dom):
    if isinstance(dom, BoxDomain):
        return dom.volume
    if isinstance(dom, ZonotopeDomain):
        return zonotope_jacobian(dom)
    return dom.volume


def _max_on_domain(f: LinearFormFunction, dom):
    if isinstance(dom, BoxDomain):
        return constant_bound(f, dom).F
    if isinstance(dom, SimplexDomain):
        return float(np.max(f(dom.vertices)))
    # f = g(c^T x) with g convex: the max sits at an extreme value of c^T x
    ct = dom.A.T @ f.c_array
    cb = float(f.c_array @ dom.b)
    ends = np.array([cb + ct[ct < 0].sum(), cb + ct[ct > 0].sum()])
    return float(np.max(f.g(ends)))


def integrate_mu(f: LinearFormFunction, mu, dom) -> tuple:
    """``(int_Q mu, tag)`` for the constant bound or the concave envelope."""
    mu = MuKind.parse(mu)
    if mu is MuKind.CONSTANT:
        return _max_on_domain(f, dom) * _volume(dom), "mu:constant_max"
    if isinstance(dom, BoxDomain):
        return integrate_envelope(f, dom), "mu:envelope_subset_sum"
    if isinstance(dom, SimplexDomain):
        # the envelope of a convex f on a simplex is its affine interpolant
        return dom.volume * float(np.mean(f(dom.vertices))), "mu:simplex_interpolant"
    raise DomainError("the concave envelope is only available on boxes and simplices")


def _parts(f, mu, dom):
    # int_Q mu, int_Q f, z-integral, trace
    _check_full_dimensional(dom)
    if f.dim != dom.dim:
        raise DomainError(f"function has dimension {f.dim}, domain has {dom.dim}")
    trace = []
    i_f = integ.integrate(f, dom)
    trace.append(f"integral_f:{i_f.method.value}")
    z = integ.z_integral(f, dom, i_f)
    trace.append(f"z_integral:{z.method.value}")
    if mu is None:
        return None, i_f.value, z.value, trace
    i_mu, tag = integrate_mu(f, mu, dom)
    trace.append(tag)
    return i_mu, i_f.value, z.value, trace


def _div(a, k):
    return a / k if isinstance(a, Fraction) else float(a) / k


def vol_perspective(f: LinearFormFunction, mu, dom):
    """``vol(P) = (int_Q mu - int_Q f) / (d + 2)``."""
    _check_full_dimensional(dom)
    i_f = integ.integrate(f, dom).value
    i_mu, _ = integrate_mu(f, mu, dom)
    vol = _div(i_mu - i_f, dom.dim + 2)
    if float(vol) < -NEG_SLACK * max(1.0, abs(float(i_mu))):
        raise ConsistencyError(f"perspective volume {float(vol):.6g} < 0: mu is not an upper bound")
    return vol


def vol_naive(f: LinearFormFunction, mu, dom):
    i_mu, _, z, _ = _parts(f, mu, dom)
    return _div(i_mu, dom.dim + 2) - z


def delta(f: LinearFormFunction, dom):
    """Cut-off amount ``int_Q f / (d+2) - int_0^1 z^d int_Q f(z x) dx dz``; no upper bound involved."""
    _, i_f, z, _ = _parts(f, None, dom)
    return _div(i_f, dom.dim + 2) - z


def delta_homogeneous(f: LinearFormFunction, dom):
    """``(q - 1) / ((d + 2)(q + d + 1)) * int_Q f`` for q-homogeneous ``f``."""
    q = f.homogeneity_degree
    if q is None:
        raise DomainError(f"{type(f).__name__} is not homogeneous")
    _check_full_dimensional(dom)
    d = dom.dim
    i_f = integ.integrate(f, dom).value
    if isinstance(i_f, Fraction) and isinstance(q, int):
        return Fraction(q - 1, (d + 2) * (q + d + 1)) * i_f
    return (float(q) - 1) / ((d + 2) * (float(q) + d + 1)) * float(i_f)


def delta_exp_box(f: ExpLinearForm, box: BoxDomain) -> float:
    """Cut-off amount for ``e^{c^T x} - 1`` on a box, ``c > 0``::

        (1/prod c) (e^{c^T v0} prod (e^{u c_j} - 1) / (d+2) - J) + u^d / ((d+1)(d+2))

    with ``J = int_0^1 e^{z c^T v0} prod_j (e^{z u c_j} - 1) dz`` by subset expansion.
    """
    c = f.c_array
    if not np.all(c > 0):
        raise DomainError("delta_exp_box needs c > 0")
    d = box.dim
    s = float(c @ box.v0_array)
    u = float(box.u)
    top = s + u * c.sum()
    if top > integ.LOG_MAX:
        raise RangeError(f"cut-off amount overflows binary64: exponent {top:.6g}", top)
    prod_c = float(np.prod(c))
    mass = math.exp(s) * float(np.prod(np.expm1(u * c)))
    sums = integ.subset_sums(c)
    sizes = np.array([bin(m).count("1") for m in range(2**d)])
    signs = np.where((d - sizes) % 2 == 0, 1.0, -1.0)
    terms = (signs * integ.expm1_ratio(s + u * sums) / prod_c).tolist()
    tail = u**d / ((d + 1) * (d + 2))
    value = math.fsum([mass / prod_c / (d + 2), tail] + [-t for t in terms])
    magnitude = mass / prod_c / (d + 2) + tail + sum(abs(t) for t in terms)
    if value <= 0 or magnitude > integ.CANCELLATION_LIMIT * value:
        # small boxes: the alternating sum cancels most digits
        return float(delta(f, box))
    return value


def cutoff_ratio(f: LinearFormFunction, mu, dom):
    return relaxation_report(f, mu, dom).ratio


def relaxation_report(f: LinearFormFunction, mu, dom) -> RelaxationReport:
    mu = MuKind.parse(mu)
    i_mu, i_f, z, trace = _parts(f, mu, dom)
    d = dom.dim
    vol_p = _div(i_mu - i_f, d + 2)
    vol_p0 = _div(i_mu, d + 2) - z
    gap = _div(i_f, d + 2) - z
    if float(vol_p0) <= VOLUME_FLOOR:
        raise ConsistencyError(f"naive relaxation volume {float(vol_p0):.3g} is degenerate")
    trace.append("volumes:perspective+naive")
    return RelaxationReport(vol_p, vol_p0, gap, gap / vol_p0, mu, trace)


# --- asymptotics ------------------------------------------------------------


def exprat_limit(c, d: int | None = None) -> float:
    """``(d + 1) / prod c``, the limit of ``u^d * ratio`` for ``e^{c^T x} - 1`` with the envelope bound.

    With the constant bound the same normalised ratio tends to this value divided by ``d + 1``.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if d is None:
        d = c.size
    if c.size != d or np.any(c <= 0):
        raise DomainError("need c > 0 of length d")
    return (d + 1) / float(np.prod(c))


def cx_rat_lower_bound(q: float, d: int) -> float:
    """Asymptotic lower bound on the cut-off ratio of ``(c^T x)^q`` with the constant bound.

    ``(q-1) B / ((q+d+1) - (d+2) B)`` where ``B`` is the constant of ``power_lower_bound``.
    """
    q = float(q)
    if not q > 1:
        raise DomainError(f"need q > 1, got {q}")
    B = integ.power_bound_constant(q, d)
    den = (q + d + 1) - (d + 2) * B
    assert den > 0, "denominator must be positive for q > 1"
    return (q - 1) * B / den


def theoretical_value(f: LinearFormFunction, mu, d: int) -> float:
    """Reference value for the normalised ratio column of a sweep."""
    mu = MuKind.parse(mu)
    if isinstance(f, ExpLinearForm):
        lim = exprat_limit(f.c_array, d)
        return lim if mu is MuKind.ENVELOPE else lim / (d + 1)
    if isinstance(f, PowerLinearForm):
        return cx_rat_lower_bound(f.q, d) if float(f.q) > 1 else 0.0
    return 0.0


@dataclass
class SweepRow:
    u: float
    vol_p: float
    vol_p0: float
    delta: float
    ratio: float
    scaled_ratio: float
    theoretical: float
    asymptotic: bool = False

    def as_tuple(self) -> tuple:
        return (self.u, self.vol_p, self.vol_p0, self.delta, self.ratio, self.scaled_ratio,
                self.theoretical, int(self.asymptotic))


SWEEP_COLUMNS = ("u", "volP", "volP0", "delta", "ratio", "scaledRatio", "theoretical", "asymptotic")


def _exp_box_scaled(f: ExpLinearForm, mu: MuKind, box: BoxDomain, log_scale: float):
    """``(int mu, int f, z-integral)`` on a box, each times ``e^{-log_scale}``."""
    c = f.c_array
    d = box.dim
    u = float(box.u)
    s = float(c @ box.v0_array)
    e_neg = math.exp(-log_scale)
    log_prod = s + float(np.sum(integ.log_expm1_ratio(u * c)))
    i_f = u**d * (math.exp(log_prod - log_scale) - e_neg)
    if mu is MuKind.CONSTANT:
        i_mu = u**d * (math.exp(s + u * c.sum() - log_scale) - e_neg)
    else:
        from .envelope import _subset_weights

        vals = np.exp(s + u * integ.subset_sums(c) - log_scale) - e_neg
        i_mu = u**d / math.factorial(d + 1) * math.fsum((_subset_weights(d) * vals).tolist())
    z = integ.z_integral_exp(f, box, log_scale=log_scale).value
    return i_mu, i_f, z


def _sweep_row(f: LinearFormFunction, mu: MuKind, v0, u: float, theory: float) -> SweepRow:
    box = BoxDomain(v0, u)
    d = box.dim
    norm = u**d if isinstance(f, ExpLinearForm) else 1.0
    if isinstance(f, ExpLinearForm):
        top = float(f.c_array @ box.v0_array) + float(u) * float(f.c_array.sum())
        if top > LOG_SAFE:
            # exponent-factored exact forms; absolute volumes exceed binary64
            i_mu, i_f, z = _exp_box_scaled(f, mu, box, top)
            p0 = i_mu / (d + 2) - z
            gap = i_f / (d + 2) - z
            ratio = gap / p0
            inf = math.inf
            return SweepRow(u, inf, inf, inf, ratio, norm * ratio, theory, True)
    try:
        rep = relaxation_report(f, mu, box)
    except RangeError:
        nan = math.nan
        return SweepRow(u, nan, nan, nan, nan, nan, theory, True)
    ratio = float(rep.ratio)
    return SweepRow(u, float(rep.vol_p), float(rep.vol_p0), float(rep.delta), ratio, norm * ratio, theory)


def ratio_sweep(f: LinearFormFunction, mu, v0: Sequence, u_values: Sequence[float],
                threads: int | None = None) -> list[SweepRow]:
    """One row per box scale ``u``; ``scaledRatio`` is ``u^d * ratio`` for the exponential family."""
    mu = MuKind.parse(mu)
    u_values = [float(u) for u in u_values]
    if not u_values:
        raise ValueError("u list is empty")
    if any(u <= 0 for u in u_values) or any(b <= a for a, b in zip(u_values, u_values[1:])):
        raise ValueError("u values must be positive and strictly increasing")
    theory = theoretical_value(f, mu, len(v0))
    threads = threads or integ.worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda u: _sweep_row(f, mu, v0, u, theory), u_values))
    return [_sweep_row(f, mu, v0, u, theory) for u in u_values]


@dataclass
class SufficientConditionReport:
    rows: list[tuple[float, float]]
    decreasing: bool
    satisfied: bool
    threshold: float

    @property
    def verdict(self) -> str:
        if self.satisfied:
            return "condition empirically satisfied"
        return "condition not satisfied"


def mean_value_ratio(f: LinearFormFunction, mu, box: BoxDomain) -> float:
    """``int_Q f / int_Q mu`` on a box (equal to the ratio of cube averages)."""
    mu = MuKind.parse(mu)
    if isinstance(f, ExpLinearForm):
        top = float(f.c_array @ box.v0_array) + float(box.u) * float(f.c_array.sum())
        i_mu, i_f, _ = _exp_box_scaled(f, mu, box, max(0.0, top))
        return i_f / i_mu
    if isinstance(f, SuperPolyForm) and mu is MuKind.CONSTANT:
        # integrate f / F pointwise so neither side overflows
        tmax = float(f.c_array @ box.v0_array) + float(box.u) * float(f.c_array.sum())
        log_F = float(f.log_g1(tmax))

        def ratio(X):
            t = f.linear_form(X)
            return np.exp(f.log_g1(t) - log_F) - np.exp(-log_F)

        avg = integ.quadrature_integrate(ratio, box).value / float(box.volume)
        return avg / -math.expm1(-log_F)
    i_f = integ.integrate(f, box).value
    i_mu, _ = integrate_mu(f, mu, box)
    return float(i_f) / float(i_mu)


def check_sufficient_condition(f: LinearFormFunction, mu, v0: Sequence, u_values: Sequence[float],
                               threshold: float = 0.05) -> SufficientConditionReport:
    """Track ``r(u) = int_Q f / int_Q mu`` over a sweep of box scales.

    The condition is reported as empirically satisfied when ``r`` decreases
    along the sweep and ends below ``threshold``. This is evidence for a zero
    limit, not a proof.
    """
    if f.g(0.0) != 0 or np.any(np.asarray(f.c) < 0):
        raise DomainError("need a nonnegative f with f(0) = 0")
    u_values = [float(u) for u in u_values]
    rows = [(u, mean_value_ratio(f, mu, BoxDomain(v0, u))) for u in u_values]
    r = [x for _, x in rows]
    decreasing = all(b < a for a, b in zip(r, r[1:]))
    return SufficientConditionReport(rows, decreasing, decreasing and r[-1] < threshold, threshold)
