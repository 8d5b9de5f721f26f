"""Exact and oracle integration of the function families.

Closed forms:

* powers of a linear form over the unit cube, by the multinomial sum and by
  Brion's vertex formula summed over Kuhn cells;
* ``e^{c^T x} - 1`` over a zonotope by the product of one-dimensional
  integrals (and, for cross-checking, by Brion's formula over Kuhn cells);
* the ``z``-weighted integral ``int_0^1 z^d int_Q f(z x) dx dz`` by the
  homogeneous shortcut or by subset expansion of the exponential product.

Oracles: Monte Carlo with counter-based per-chunk streams and tensor
Gauss-Legendre quadrature.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import integrate as sp_integrate
from scipy.linalg import expm

from .errors import CombinatorialBlowupError, DomainError, GenericityError, RangeError
from .functions import (
    GENERICITY_TOL,
    SUBSET_CAP,
    ExpLinearForm,
    LinearFormFunction,
    PowerLinearForm,
    SuperPolyForm,
    check_genericity,
    is_exact_power,
    subset_sums,
)
from .geometry import (
    KUHN_CAP,
    BoxDomain,
    SimplexDomain,
    ZonotopeDomain,
    _is_rational,
    kuhn_permutations,
    zonotope_jacobian,
)

MONOMIAL_CAP = 10**7
TAYLOR_CUTOFF = 1e-4
LOG_MAX = math.log(np.finfo(float).max)
# closed forms losing more digits than this fall back to quadrature
CANCELLATION_LIMIT = 1e5
MC_CHUNK = 2**16


class Method(str, Enum):
    MULTINOMIAL = "multinomial"
    TRIANGULATION_BRION = "triangulation_brion"
    PRODUCT_FORMULA = "product_formula"
    SUBSET_EXPANSION = "subset_expansion"
    HOMOGENEOUS_SHORTCUT = "homogeneous_shortcut"
    MONTE_CARLO = "monte_carlo"
    QUADRATURE = "quadrature"


@dataclass(frozen=True)
class IntegralResult:
    value: float
    method: Method
    error_estimate: float | None = None

    def __post_init__(self):
        if self.error_estimate is not None and not self.error_estimate >= 0:
            raise ValueError(f"error estimate must be >= 0, got {self.error_estimate}")

    def __float__(self) -> float:
        return float(self.value)


def worker_count() -> int:
    """Thread cap from ``PG_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PG_THREADS", "1")))
    except ValueError:
        return 1


# --- scalar helpers -------------------------------------------------------


def expm1_ratio(t):
    """``(e^t - 1) / t`` with the limit 1 at 0; Taylor series for ``|t| < 1e-4``."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, t)
    with np.errstate(over="ignore"):
        out = np.where(small, 1 + t / 2 + t * t / 6 + t**3 / 24, np.expm1(safe) / safe)
    return out


def log_expm1_ratio(t):
    """``ln((e^t - 1) / t)``, finite for every real ``t``."""
    t = np.asarray(t, dtype=float)
    big = t > 30
    neg = t < -30
    mid = ~(big | neg)
    out = np.empty_like(t)
    tb = t[big]
    out[big] = tb + np.log1p(-np.exp(-tb)) - np.log(tb)
    tn = t[neg]
    out[neg] = np.log(-np.expm1(tn)) - np.log(-tn)
    out[mid] = np.log(expm1_ratio(t[mid]))
    return out


def _as_int_q(q) -> int:
    if isinstance(q, bool):
        raise DomainError("q must be a number")
    if isinstance(q, int):
        return q
    if isinstance(q, Fraction) and q.denominator == 1:
        return int(q)
    if isinstance(q, float) and q.is_integer():
        return int(q)
    raise DomainError(f"the multinomial formula needs an integer exponent, got q={q}")


def _exact_or_float(values) -> tuple[list, bool]:
    vals = list(values)
    if all(_is_rational(x) for x in vals):
        return [Fraction(x) for x in vals], True
    return [float(x) for x in vals], False


# --- powers of linear forms ------------------------------------------------


def _power_cube_series(c: list, q: int, shift, exact: bool):
    # q! [t^q] (sum_a shift^a t^a / a!) * prod_j (sum_a c_j^a t^a / (a+1)!)
    fact = [math.factorial(k) for k in range(q + 2)]
    if exact:
        poly = [Fraction(shift) ** a / fact[a] for a in range(q + 1)]
        for cj in c:
            ser = [cj**a / fact[a + 1] for a in range(q + 1)]
            poly = [sum(poly[i] * ser[k - i] for i in range(k + 1)) for k in range(q + 1)]
        return fact[q] * poly[q]
    fact_f = np.array([float(x) for x in fact])
    a = np.arange(q + 1)
    poly = float(shift) ** a / fact_f[: q + 1] if shift else (a == 0).astype(float)
    for cj in c:
        ser = float(cj) ** a / fact_f[1 : q + 2]
        poly = np.convolve(poly, ser)[: q + 1]
    return float(fact_f[q] * poly[q])


def integrate_power_multinomial(c, q, n: int | None = None, shift=0, cap: int = MONOMIAL_CAP):
    """``int_{[0,1]^n} (c^T y + shift)^q dy`` by the multinomial theorem.

    Sums ``q! prod c_j^a_j / prod (a_j + 1)!`` over all ``|a| = q``. The sum is
    organised coordinate by coordinate as a truncated product of power
    series. The result is a ``Fraction`` when ``c`` and ``shift`` are all
    ints/Fractions, a float otherwise. ``n`` larger than ``len(c)`` pads ``c``
    with zeros.
    """
    q = _as_int_q(q)
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    c = list(np.atleast_1d(np.asarray(c, dtype=object)))
    if n is not None:
        if n < len(c):
            raise DomainError(f"n={n} is smaller than len(c)={len(c)}")
        c = c + [0] * (n - len(c))
    n = len(c)
    terms = math.comb(q + n - 1, n - 1)
    if terms > cap:
        raise CombinatorialBlowupError(f"{terms} monomials for q={q}, n={n}, above the cap {cap}")
    vals, exact = _exact_or_float(c + [shift])
    return _power_cube_series(vals[:-1], q, vals[-1], exact)


def _chain_values(c: np.ndarray, shift: float, cap: int) -> np.ndarray:
    # a[p, j] = shift + c^T w_j for every Kuhn cell p; w_j marks perm[n-j:]
    n = c.size
    perms = kuhn_permutations(n, cap)
    top = np.cumsum(c[perms][:, ::-1], axis=1)
    return shift + np.concatenate([np.zeros((perms.shape[0], 1)), top], axis=1)


def _brion_sums(vals: np.ndarray, power: float | None) -> list[float]:
    # terms g(a_j) / prod_{k != j} (a_j - a_k), g = x^power or exp
    m = vals.shape[1]
    diff = vals[:, :, None] - vals[:, None, :]
    diff[:, np.arange(m), np.arange(m)] = 1.0
    denom = np.prod(diff, axis=2)
    num = np.exp(vals) if power is None else vals**power
    return (num / denom).ravel().tolist()


def integrate_power_triangulation(
    c, q, n: int | None = None, shift: float = 0.0, tol: float = GENERICITY_TOL, cap: int = KUHN_CAP
) -> float:
    """``int_{[0,1]^n} (c^T y + shift)^q dy`` by Brion's formula on Kuhn cells.

    Each cell contributes ``Gamma(q+1)/Gamma(q+n+1) * sum_j a_j^{q+n} /
    prod_{k != j} (a_j - a_k)`` with ``a_j = shift + c^T w_j``. Real ``q >= 1``
    is allowed as long as every ``a_j`` is nonnegative.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    if n is not None:
        if n < c.size:
            raise DomainError(f"n={n} is smaller than len(c)={c.size}")
        c = np.concatenate([c, np.zeros(n - c.size)])
    q = float(q)
    if not q >= 1:
        raise DomainError(f"q must be >= 1, got {q}")
    gen = check_genericity(c, tol)
    if not gen:
        raise GenericityError(f"subset {gen.witness} of c={c.tolist()} sums to ~0", gen.witness)
    vals = _chain_values(c, float(shift), cap)
    if not q.is_integer() and np.any(vals < 0):
        raise DomainError(f"negative base with non-integer exponent q={q}")
    n = c.size
    scale = math.exp(math.lgamma(q + 1) - math.lgamma(q + n + 1))
    return scale * math.fsum(_brion_sums(vals, q + n))


def integrate_all_one_power(n: int, q: int) -> Fraction:
    """``int_{[0,1]^n} (y_1 + ... + y_n)^q dy`` as an exact rational."""
    q = _as_int_q(q)
    total = sum((-1) ** (n - j) * math.comb(n, j) * j ** (q + n) for j in range(n + 1))
    return Fraction(math.factorial(q) * total, math.factorial(q + n))


def all_one_lower_bound(n: int, q: int) -> Fraction:
    """The companion bound ``q! n! / (q+n+1)! * sum_{j<=n} j^q``."""
    q = _as_int_q(q)
    return Fraction(math.factorial(q) * math.factorial(n) * sum(j**q for j in range(n + 1)),
                    math.factorial(q + n + 1))


def integrate_power_unit_cube(c, q, shift=0.0):
    """``int_{[0,1]^n} (c^T y + shift)^q dy`` for any real ``c`` (no genericity needed).

    Integer ``q`` goes through the multinomial sum. Real ``q`` reflects negative
    coefficients (``y_j -> 1 - y_j``), drops zero ones and then uses the Kuhn/Brion
    sum, which is generic once every coefficient is positive.
    Returns ``(value, method)``.
    """
    try:
        qi = _as_int_q(q)
    except DomainError:
        qi = None
    if qi is not None:
        return integrate_power_multinomial(c, qi, shift=shift), Method.MULTINOMIAL
    c = np.atleast_1d(np.asarray(c, dtype=float))
    shift = float(shift) + float(np.sum(c[c < 0]))
    c = np.abs(c[c != 0])
    if shift < 0:
        raise DomainError(f"linear form takes negative values on the cube; q={q} is not an integer")
    if c.size == 0:
        return shift ** float(q), Method.TRIANGULATION_BRION
    return integrate_power_triangulation(c, q, shift=shift), Method.TRIANGULATION_BRION


def integrate_power_domain(f: PowerLinearForm, dom) -> IntegralResult:
    """``int_dom (c^T x)^q dx`` over a box, zonotope or simplex.

    On a box this is ``u^{q+d} int_{[0,1]^d} (c^T y + c^T v0 / u)^q dy``, exact
    for rational data and integer ``q``. A zonotope pulls back to the cube with
    the factor ``sqrt(det(A^T A))``.
    """
    if f.dim != dom.dim:
        raise DomainError(f"function has dimension {f.dim}, domain has {dom.dim}")
    if isinstance(dom, SimplexDomain):
        return _integrate_power_simplex(f, dom)
    if isinstance(dom, BoxDomain):
        q = f.q
        if is_exact_power(f, dom.v0, dom.u):
            qi = f.integer_q
            u = Fraction(dom.u)
            s = sum(Fraction(ci) * Fraction(vi) for ci, vi in zip(f.c, dom.v0)) / u
            val = u ** (qi + dom.dim) * integrate_power_multinomial(list(f.c), qi, shift=s)
            return IntegralResult(val, Method.MULTINOMIAL)
        u = float(dom.u)
        s = float(f.c_array @ dom.v0_array) / u
        val, method = integrate_power_unit_cube(f.c_array, q, s)
        return IntegralResult(u ** (float(q) + dom.dim) * val, method)
    jac = zonotope_jacobian(dom)
    ct = dom.A.T @ f.c_array
    val, method = integrate_power_unit_cube(ct, f.q, float(f.c_array @ dom.b))
    return IntegralResult(jac * val, method)


def _divided_difference_exp(a: np.ndarray) -> float:
    # exp[a_0, ..., a_m] as the corner entry of expm of a bidiagonal matrix;
    # stable for repeated or clustered nodes
    m = a.size
    M = np.diag(a) + np.diag(np.ones(m - 1), 1)
    return float(expm(M)[0, -1])


def _complete_homogeneous(a: np.ndarray, q: int) -> float:
    poly = np.zeros(q + 1)
    poly[0] = 1.0
    for x in a:
        poly = np.convolve(poly, float(x) ** np.arange(q + 1))[: q + 1]
    return float(poly[q])


def _integrate_power_simplex(f: PowerLinearForm, simplex: SimplexDomain) -> IntegralResult:
    d = simplex.dim
    a = simplex.vertices @ f.c_array
    fac = math.factorial(d) * simplex.volume
    qi = f.integer_q
    if qi is not None:
        # int_S l^q = d! vol q!/(q+d)! h_q(a)
        val = fac * math.factorial(qi) / math.factorial(qi + d) * _complete_homogeneous(a, qi)
        return IntegralResult(val, Method.MULTINOMIAL)
    gen = check_genericity(np.diff(np.sort(a)))
    if not gen or np.any(a < 0):
        raise GenericityError("simplex vertex values of c^T x must be distinct and >= 0 for real q")
    q = float(f.q)
    scale = math.exp(math.lgamma(q + 1) - math.lgamma(q + d + 1))
    val = fac * scale * math.fsum(_brion_sums(a[None, :], q + d))
    return IntegralResult(val, Method.TRIANGULATION_BRION)


def power_lower_bound(c, q, v0, u) -> float:
    """Lower bound on ``int_{[0,1]^d} (c^T x + c^T v0 / u)^q dx`` for ``c, v0 > 0``.

    ``Gamma(q+1) d! / Gamma(q+d+1) * sum_{j<=d} j^q / d^q * (c^T 1 + c^T v0 / u)^q``.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    if c.shape != v0.shape:
        raise DomainError(f"c has shape {c.shape}, v0 has shape {v0.shape}")
    return power_bound_constant(float(q), c.size) * (c.sum() + c @ v0 / float(u)) ** float(q)


def power_bound_constant(q: float, d: int) -> float:
    """``Gamma(q+1) d! / Gamma(q+d+1) * sum_{j=1}^d j^q / d^q``."""
    lead = math.exp(math.lgamma(q + 1) + math.lgamma(d + 1) - math.lgamma(q + d + 1))
    return lead * math.fsum((j / d) ** q for j in range(1, d + 1))


# --- exponentials ----------------------------------------------------------


def _as_zonotope(dom) -> ZonotopeDomain:
    if isinstance(dom, BoxDomain):
        return dom.to_zonotope()
    if isinstance(dom, ZonotopeDomain):
        return dom
    raise DomainError(f"expected a box or zonotope, got {type(dom).__name__}")


def exp_log_mass(f: ExpLinearForm, dom) -> tuple[float, float]:
    """``(ln jac, ln(e^{c^T b} prod_j (e^{ct_j} - 1)/ct_j))`` with ``ct = A^T c``."""
    z = _as_zonotope(dom)
    ct = z.A.T @ f.c_array
    return math.log(zonotope_jacobian(z)), float(f.c_array @ z.b + np.sum(log_expm1_ratio(ct)))


def integrate_exp_zonotope(f: ExpLinearForm, dom) -> IntegralResult:
    """``int_Q (e^{c^T x} - 1) dx = jac * (e^{c^T b} prod_j (e^{ct_j}-1)/ct_j - 1)``.

    Evaluated as ``jac * expm1(log of the product)``, which keeps full relative
    accuracy on small boxes. A box ``v0 + u[0,1]^d`` is the case ``A = u I``.
    """
    if f.dim != dom.dim:
        raise DomainError(f"function has dimension {f.dim}, domain has {dom.dim}")
    log_jac, log_prod = exp_log_mass(f, dom)
    if log_prod + log_jac > LOG_MAX:
        raise RangeError(f"integral overflows binary64: exponent {log_prod:.6g}", log_prod)
    return IntegralResult(math.exp(log_jac) * math.expm1(log_prod), Method.PRODUCT_FORMULA)


def exp_cube_product(c) -> float:
    """``prod_j (e^{c_j} - 1) / c_j = int_{[0,1]^n} e^{c^T y} dy``."""
    return float(np.prod(expm1_ratio(np.asarray(c, dtype=float))))


def integrate_exp_triangulation(c, tol: float = GENERICITY_TOL, cap: int = KUHN_CAP) -> float:
    """``int_{[0,1]^n} e^{c^T y} dy`` as the permutation sum of Brion terms.

    ``sum_perm sum_j e^{a_j} / prod_{k != j} (a_j - a_k)``, ``a_j = c^T w_j``.
    """
    c = np.atleast_1d(np.asarray(c, dtype=float))
    gen = check_genericity(c, tol)
    if not gen:
        raise GenericityError(f"subset {gen.witness} of c={c.tolist()} sums to ~0", gen.witness)
    return math.fsum(_brion_sums(_chain_values(c, 0.0, cap), None))


def _integrate_exp_simplex(f: ExpLinearForm, simplex: SimplexDomain) -> IntegralResult:
    a = simplex.vertices @ f.c_array
    if np.max(a) > LOG_MAX:
        raise RangeError(f"integral overflows binary64: exponent {np.max(a):.6g}", float(np.max(a)))
    d = simplex.dim
    vol = simplex.volume
    val = math.factorial(d) * vol * _divided_difference_exp(a) - vol
    return IntegralResult(val, Method.TRIANGULATION_BRION)


# --- z-weighted integrals ----------------------------------------------------


def z_integral_homogeneous(f: LinearFormFunction, dom, inner: IntegralResult | None = None) -> IntegralResult:
    """``int_0^1 z^d int_Q f(z x) dx dz = int_Q f / (q + d + 1)`` for q-homogeneous f."""
    q = f.homogeneity_degree
    if q is None:
        raise DomainError(f"{type(f).__name__} is not homogeneous")
    if inner is None:
        inner = integrate(f, dom)
    d = dom.dim
    if isinstance(inner.value, Fraction) and isinstance(q, int):
        return IntegralResult(inner.value / (q + d + 1), Method.HOMOGENEOUS_SHORTCUT)
    return IntegralResult(float(inner.value) / (float(q) + d + 1), Method.HOMOGENEOUS_SHORTCUT)


def _scaled_phi(a: np.ndarray, log_scale: float) -> np.ndarray:
    # e^{-L} (e^a - 1)/a
    a = np.asarray(a, dtype=float)
    small = np.abs(a) < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, a)
    big = (np.exp(a - log_scale) - math.exp(-log_scale)) / safe
    return np.where(small, expm1_ratio(np.where(small, a, 0.0)) * math.exp(-log_scale), big)


def _z_exp_subset(c: np.ndarray, s: float, u: float, log_scale: float):
    """Subset expansion of the box z-integral, scaled by ``e^{-log_scale}``.

    Returns ``(value, cancellation)`` where ``cancellation`` is the ratio of the
    summed term magnitudes to the result.
    """
    d = c.size
    sums = subset_sums(c, SUBSET_CAP)
    sizes = np.array([bin(m).count("1") for m in range(2**d)])
    signs = np.where((d - sizes) % 2 == 0, 1.0, -1.0)
    terms = signs * _scaled_phi(s + u * sums, log_scale) / float(np.prod(c))
    tail = u**d * math.exp(-log_scale) / (d + 1)
    value = math.fsum(terms.tolist()) - tail
    mag = float(np.sum(np.abs(terms))) + tail
    cancel = mag / abs(value) if value != 0 else math.inf
    return value, cancel


def _z_exp_quadrature(cb: float, ct: np.ndarray, log_jac: float, d: int, log_scale: float):
    # int_0^1 z^d jac (e^{z cb} prod phi(z ct_j) - 1) dz, scaled by e^{-L}
    def h(z):
        e = z * cb + float(np.sum(log_expm1_ratio(z * ct)))
        if log_scale == 0.0:
            inner = math.expm1(e)
        else:
            inner = math.exp(e - log_scale) - math.exp(-log_scale)
        return z**d * math.exp(log_jac) * inner

    val, err = sp_integrate.quad(h, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return val, err


def z_integral_exp(f: ExpLinearForm, dom, log_scale: float = 0.0, cap: int = SUBSET_CAP) -> IntegralResult:
    """``int_0^1 z^d int_Q (e^{z c^T x} - 1) dx dz``.

    On a box with ``c > 0``: ``(1/prod c) sum_S (-1)^{d-|S|} (e^{a_S}-1)/a_S
    - u^d/(d+1)``, ``a_S = c^T v0 + u sum_{j in S} c_j``. Falls back to adaptive
    quadrature of the one-dimensional z-integral when d exceeds ``cap``, ``c`` has
    zero entries, or the alternating sum would cancel too many digits.

    ``log_scale`` returns the value multiplied by ``e^{-log_scale}`` so callers
    can form ratios beyond the binary64 range.
    """
    if f.dim != dom.dim:
        raise DomainError(f"function has dimension {f.dim}, domain has {dom.dim}")
    if isinstance(dom, SimplexDomain):
        return _z_exp_simplex(f, dom, log_scale)
    z = _as_zonotope(dom)
    d = dom.dim
    if isinstance(dom, BoxDomain) and d <= cap and np.all(f.c_array > 0):
        c = f.c_array
        s = float(c @ dom.v0_array)
        u = float(dom.u)
        top = s + u * c.sum()
        if top - log_scale > LOG_MAX:
            raise RangeError(f"z-integral overflows binary64: exponent {top:.6g}", top)
        value, cancel = _z_exp_subset(c, s, u, log_scale)
        if cancel < CANCELLATION_LIMIT:
            return IntegralResult(value, Method.SUBSET_EXPANSION)
    ct = z.A.T @ f.c_array
    cb = float(f.c_array @ z.b)
    top = cb + float(np.sum(np.maximum(ct, 0.0)))
    if top - log_scale > LOG_MAX:
        raise RangeError(f"z-integral overflows binary64: exponent {top:.6g}", top)
    val, err = _z_exp_quadrature(cb, ct, math.log(zonotope_jacobian(z)), d, log_scale)
    return IntegralResult(val, Method.QUADRATURE, err)


def _z_exp_simplex(f: ExpLinearForm, simplex: SimplexDomain, log_scale: float) -> IntegralResult:
    a = simplex.vertices @ f.c_array
    d = simplex.dim
    vol = simplex.volume
    fac = math.factorial(d) * vol

    def h(z):
        # e^{-L} int_S (e^{z c.x} - 1) dx; divided difference of exp at the vertex values
        inner = fac * _divided_difference_exp(z * a - log_scale) - vol * math.exp(-log_scale)
        return z**d * inner

    val, err = sp_integrate.quad(h, 0.0, 1.0, epsabs=0.0, epsrel=1e-12, limit=200)
    return IntegralResult(val, Method.QUADRATURE, err)


# --- quadrature and Monte Carlo oracles ----------------------------------


def _gl_rule(dim: int, panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    # composite Gauss-Legendre tensor rule on [0,1]^dim
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * (x[None, :] + 1) / 2).ravel()
    weights = (h[:, None] * w[None, :] / 2).ravel()
    grids = np.meshgrid(*([nodes] * dim), indexing="ij")
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    Y = np.stack([g.ravel() for g in grids], axis=1)
    W = np.prod(np.stack([g.ravel() for g in wgrids], axis=1), axis=1)
    return Y, W


_GL_SIZES = {1: (32, 16), 2: (12, 12), 3: (5, 10), 4: (3, 8), 5: (2, 6)}


def _domain_map(dom):
    """``(phi, measure, k)``: a map from ``[0,1]^k`` onto ``dom`` with constant density."""
    if isinstance(dom, BoxDomain):
        v0, u = dom.v0_array, float(dom.u)
        return (lambda Y: v0 + u * Y), float(dom.u) ** dom.dim, dom.dim
    if isinstance(dom, ZonotopeDomain):
        return (lambda Y: Y @ dom.A.T + dom.b), zonotope_jacobian(dom), dom.n_generators
    if isinstance(dom, SimplexDomain):
        V = dom.vertices
        d = dom.dim
        # sorted coordinates lie in the Kuhn cell x_0 <= ... <= x_{d-1}; send its
        # chain vertex w_j to V_j, i.e. column d-j of M is V_j - V_{j-1}
        M = np.empty((d, d))
        for j in range(1, d + 1):
            M[:, d - j] = V[j] - V[j - 1]
        return (lambda Y: V[0] + np.sort(Y, axis=1) @ M.T), dom.volume, d
    raise DomainError(f"unsupported domain {type(dom).__name__}")


def _duffy(dom: SimplexDomain):
    # collapsed coordinates: smooth map of the cube onto the simplex
    V = dom.vertices
    E = dom.edge_matrix
    d = dom.dim

    def phi(Y):
        lam = np.empty_like(Y)
        rest = np.ones(Y.shape[0])
        jac = np.ones(Y.shape[0])
        for k in range(d):
            lam[:, k] = Y[:, k] * rest
            if k > 0:
                jac *= rest
            rest = rest * (1 - Y[:, k])
        return V[0] + lam @ E.T, jac

    return phi, abs(float(np.linalg.det(E)))


def quadrature_integrate(func: Callable, dom, sizes: tuple[int, int] | None = None) -> IntegralResult:
    """Tensor Gauss-Legendre quadrature of a vectorized ``func`` over ``dom``.

    The error estimate is the difference to the same rule with half the panels.
    """
    if isinstance(dom, SimplexDomain):
        phi, measure = _duffy(dom)
        k = dom.dim
    else:
        phi0, measure, k = _domain_map(dom)
        phi = lambda Y: (phi0(Y), 1.0)  # noqa: E731
    panels, order = sizes or _GL_SIZES.get(k, (1, 5))

    def rule(p):
        Y, W = _gl_rule(k, p, order)
        X, jac = phi(Y)
        return measure * float(np.sum(W * jac * np.asarray(func(X), dtype=float)))

    fine = rule(panels)
    coarse = rule(max(1, panels // 2)) if panels > 1 else rule(panels + 1)
    return IntegralResult(fine, Method.QUADRATURE, abs(fine - coarse))


def _chunk_stats(func, phi, k, seed, index, size):
    ss = np.random.SeedSequence(seed, spawn_key=(index,))
    rng = np.random.Generator(np.random.Philox(ss))
    vals = np.asarray(func(phi(rng.random((size, k)))), dtype=float)
    mean = float(np.mean(vals))
    m2 = float(np.sum((vals - mean) ** 2))
    return size, mean, m2


def monte_carlo_integrate(
    func: Callable, dom, samples: int = 10**6, seed: int = 42, chunk: int = MC_CHUNK, threads: int | None = None
) -> IntegralResult:
    """Plain Monte Carlo estimate of ``int_dom func``.

    Chunk ``i`` draws from its own Philox stream keyed by ``(seed, i)`` and the
    chunk statistics are merged in index order, so the result does not depend on
    the number of worker threads.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    phi, measure, k = _domain_map(dom)
    sizes = [chunk] * (samples // chunk)
    if samples % chunk:
        sizes.append(samples % chunk)
    threads = threads or worker_count()
    jobs = [(func, phi, k, seed, i, s) for i, s in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            stats = list(pool.map(lambda a: _chunk_stats(*a), jobs))
    else:
        stats = [_chunk_stats(*a) for a in jobs]
    n, mean, m2 = stats[0]
    for nb, mb, m2b in stats[1:]:
        tot = n + nb
        delta = mb - mean
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    err = measure * math.sqrt(m2 / (n - 1) / n) if n > 1 else math.inf
    return IntegralResult(measure * mean, Method.MONTE_CARLO, err)


# --- dispatch -----------------------------------------------------------------


def integrate(f: LinearFormFunction, dom) -> IntegralResult:
    """``int_dom f`` by the best available closed form (quadrature for superpoly)."""
    if f.dim != dom.dim:
        raise DomainError(f"function has dimension {f.dim}, domain has {dom.dim}")
    if isinstance(f, PowerLinearForm):
        return integrate_power_domain(f, dom)
    if isinstance(f, ExpLinearForm):
        if isinstance(dom, SimplexDomain):
            return _integrate_exp_simplex(f, dom)
        return integrate_exp_zonotope(f, dom)
    if isinstance(f, SuperPolyForm):
        return quadrature_integrate(f, dom)
    raise TypeError(f"unsupported function {type(f).__name__}")


def z_integral(f: LinearFormFunction, dom, inner: IntegralResult | None = None) -> IntegralResult:
    """``int_0^1 z^d int_Q f(z x) dx dz`` by the cheapest valid route."""
    if f.homogeneity_degree is not None:
        return z_integral_homogeneous(f, dom, inner)
    if isinstance(f, ExpLinearForm):
        return z_integral_exp(f, dom)
    return z_integral_quadrature(f, dom)


def z_integral_quadrature(f: LinearFormFunction, dom) -> IntegralResult:
    """Joint tensor quadrature over ``(z, x)`` of ``z^d f(z x)``."""
    d = dom.dim
    if isinstance(dom, SimplexDomain):
        phi, measure = _duffy(dom)
        k = d
    else:
        phi0, measure, k = _domain_map(dom)
        phi = lambda Y: (phi0(Y), 1.0)  # noqa: E731
    panels, order = _GL_SIZES.get(k + 1, (1, 5))

    def rule(p):
        Y, W = _gl_rule(k + 1, p, order)
        z = Y[:, 0]
        X, jac = phi(Y[:, 1:])
        vals = np.asarray(f(z[:, None] * X), dtype=float)
        return measure * float(np.sum(W * jac * z**d * vals))

    fine = rule(panels)
    coarse = rule(max(1, panels // 2)) if panels > 1 else rule(panels + 1)
    return IntegralResult(fine, Method.QUADRATURE, abs(fine - coarse))
