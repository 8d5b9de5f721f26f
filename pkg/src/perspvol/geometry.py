"""Box, zonotope and simplex domains, and Kuhn's triangulation of the cube.

Kuhn cells are indexed by permutations ``perm = (i_1, ..., i_n)`` (0-based)
of the coordinates; the cell is ``{x : 0 <= x[i_1] <= ... <= x[i_n] <= 1}``.
Its vertex chain is ``w_0 = 0`` and ``w_j`` = indicator of the top ``j``
entries ``perm[n-j:]``, so ``w_n`` is the all-ones vector.
"""
from __future__ import annotations

import itertools
import math
import numbers
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .errors import CombinatorialBlowupError, DomainError

KUHN_CAP = 9
RANK_RTOL = 1e-10


def _is_rational(x) -> bool:
    return isinstance(x, numbers.Rational)


def _as_number(x):
    # keep ints/Fractions exact, everything else becomes a Python float
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if _is_rational(x):
        return Fraction(x) if not isinstance(x, numbers.Integral) else int(x)
    return float(x)


@dataclass(frozen=True)
class BoxDomain:
    """The box ``v0 + u * [0, 1]^d``."""

    v0: tuple
    u: float

    def __init__(self, v0: Sequence, u):
        v0 = tuple(_as_number(x) for x in np.atleast_1d(np.asarray(v0, dtype=object)))
        u = _as_number(u)
        if len(v0) < 1:
            raise DomainError("box needs d >= 1")
        if any(not x > 0 for x in v0):
            raise DomainError(f"every entry of v0 must be > 0, got {v0}")
        if not u > 0 or not math.isfinite(float(u)):
            raise DomainError(f"box scale u must be finite and > 0, got {u}")
        object.__setattr__(self, "v0", v0)
        object.__setattr__(self, "u", u)

    @property
    def dim(self) -> int:
        return len(self.v0)

    @property
    def v0_array(self) -> np.ndarray:
        return np.array([float(x) for x in self.v0])

    @property
    def is_rational(self) -> bool:
        return _is_rational(self.u) and all(_is_rational(x) for x in self.v0)

    @property
    def volume(self):
        return self.u ** self.dim

    def vertex(self, mask: int) -> np.ndarray:
        """Box vertex ``v0 + u * 1_S`` where bit i of ``mask`` marks i in S."""
        bits = np.array([(mask >> i) & 1 for i in range(self.dim)], dtype=float)
        return self.v0_array + float(self.u) * bits

    def vertices(self) -> np.ndarray:
        """All 2^d vertices, row ``m`` being ``vertex(m)``."""
        d = self.dim
        masks = np.arange(2**d)
        bits = (masks[:, None] >> np.arange(d)[None, :]) & 1
        return self.v0_array[None, :] + float(self.u) * bits

    def to_zonotope(self) -> "ZonotopeDomain":
        return ZonotopeDomain(float(self.u) * np.eye(self.dim), self.v0_array)

    def contains(self, x, tol: float = 1e-12) -> np.ndarray:
        y = (np.asarray(x, dtype=float) - self.v0_array) / float(self.u)
        return np.all((y >= -tol) & (y <= 1 + tol), axis=-1)

    def to_dict(self) -> dict:
        return {"kind": "box", "v0": [float(x) for x in self.v0], "u": float(self.u)}


@dataclass(frozen=True, eq=False)
class ZonotopeDomain:
    """The zonotope ``{A y + b : y in [0, 1]^n}`` with ``A`` of full column rank."""

    A: np.ndarray
    b: np.ndarray

    def __init__(self, A, b):
        A = np.array(A, dtype=float, ndmin=2)
        b = np.array(b, dtype=float, ndmin=1)
        if A.shape[0] != b.shape[0]:
            raise DomainError(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
        if A.shape[1] > A.shape[0]:
            raise DomainError(f"need n <= d, got A of shape {A.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DomainError("A and b must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        zonotope_jacobian(self)  # rank check

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def n_generators(self) -> int:
        return self.A.shape[1]

    @property
    def full_dimensional(self) -> bool:
        return self.A.shape[0] == self.A.shape[1]

    @property
    def volume(self) -> float:
        return zonotope_jacobian(self)

    def to_dict(self) -> dict:
        return {"kind": "zonotope", "A": self.A.tolist(), "b": self.b.tolist()}


@dataclass(frozen=True, eq=False)
class SimplexDomain:
    """A d-simplex given by its d+1 vertices (one per row)."""

    vertices: np.ndarray

    def __init__(self, vertices, rtol: float = 1e-12):
        V = np.array(vertices, dtype=float, ndmin=2)
        if V.shape[0] != V.shape[1] + 1:
            raise DomainError(f"a d-simplex needs d+1 vertices in R^d, got shape {V.shape}")
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)
        s = np.linalg.svd(self.edge_matrix, compute_uv=False)
        if not (s[0] > 0 and s[-1] > rtol * s[0]):
            raise DomainError("simplex vertices are affinely dependent")

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def edge_matrix(self) -> np.ndarray:
        return (self.vertices[1:] - self.vertices[0]).T

    @property
    def volume(self) -> float:
        d = self.dim
        return abs(float(np.linalg.det(self.edge_matrix))) / math.factorial(d)

    def to_dict(self) -> dict:
        return {"kind": "simplex", "vertices": self.vertices.tolist()}


Domain = BoxDomain | ZonotopeDomain | SimplexDomain


def zonotope_jacobian(z: ZonotopeDomain) -> float:
    """Return ``sqrt(det(A^T A))``, the volume factor of ``y -> A y + b``.

    Computed as the product of singular values. Singular values below
    ``RANK_RTOL`` times the largest count as zero and make ``A`` rank-deficient.
    """
    s = np.linalg.svd(z.A, compute_uv=False)
    if s.size == 0 or s[0] == 0.0 or s[-1] <= RANK_RTOL * s[0]:
        raise DomainError(f"A is rank deficient (singular values {s})")
    return float(np.prod(s))


def domain_from_dict(spec: dict) -> Domain:
    kind = spec.get("kind")
    try:
        if kind == "box":
            return BoxDomain(spec["v0"], spec["u"])
        if kind == "zonotope":
            return ZonotopeDomain(spec["A"], spec["b"])
        if kind == "simplex":
            return SimplexDomain(spec["vertices"])
    except KeyError as exc:
        raise DomainError(f"domain spec of kind {kind!r} is missing field {exc}") from None
    raise DomainError(f"unknown domain kind {kind!r}")


# --- Kuhn triangulation -------------------------------------------------


@dataclass(frozen=True, eq=False)
class KuhnCell:
    perm: tuple
    vertices: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.perm)

    @property
    def volume(self) -> Fraction:
        return Fraction(1, math.factorial(self.dim))

    def vertex_masks(self) -> list[int]:
        """Bitmasks of the chain vertices ``w_0, ..., w_n``."""
        return chain_masks(self.perm)


def _check_cap(n: int, cap: int) -> None:
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if n > cap:
        raise CombinatorialBlowupError(
            f"Kuhn triangulation of dimension {n} has {n}! = {math.factorial(n)} cells, "
            f"above the cap n <= {cap}"
        )


def chain_vertices(perm: Sequence[int]) -> np.ndarray:
    n = len(perm)
    W = np.zeros((n + 1, n), dtype=np.int8)
    for j in range(1, n + 1):
        W[j] = W[j - 1]
        W[j, perm[n - j]] = 1
    W.setflags(write=False)
    return W


def chain_masks(perm: Sequence[int]) -> list[int]:
    n = len(perm)
    masks = [0]
    for j in range(1, n + 1):
        masks.append(masks[-1] | (1 << perm[n - j]))
    return masks


def kuhn_cell(n: int, index: int, cap: int = KUHN_CAP) -> KuhnCell:
    """The ``index``-th cell in lexicographic permutation order."""
    _check_cap(n, cap)
    if not 0 <= index < math.factorial(n):
        raise IndexError(f"cell index {index} out of range for n={n}")
    pool = list(range(n))
    perm = []
    for k in range(n, 0, -1):
        q, index = divmod(index, math.factorial(k - 1))
        perm.append(pool.pop(q))
    perm = tuple(perm)
    return KuhnCell(perm, chain_vertices(perm))


def kuhn_triangulate(n: int, cap: int = KUHN_CAP) -> Iterator[KuhnCell]:
    """Lazily yield the n! Kuhn cells of ``[0, 1]^n`` in lexicographic order.

    The cap is checked eagerly, before the first cell is produced.
    """
    _check_cap(n, cap)
    return (KuhnCell(p, chain_vertices(p)) for p in itertools.permutations(range(n)))


def kuhn_permutations(n: int, cap: int = KUHN_CAP) -> np.ndarray:
    """All permutations as an ``(n!, n)`` integer array, lexicographic order."""
    _check_cap(n, cap)
    return np.array(list(itertools.permutations(range(n))), dtype=np.intp).reshape(-1, n)


def permutation_rank(perms: np.ndarray) -> np.ndarray:
    """Lexicographic rank of each row of ``perms`` (inverse of ``kuhn_cell``)."""
    perms = np.atleast_2d(perms)
    n = perms.shape[1]
    rank = np.zeros(perms.shape[0], dtype=np.int64)
    for k in range(n):
        smaller_later = np.sum(perms[:, k + 1:] < perms[:, k : k + 1], axis=1)
        rank += smaller_later * math.factorial(n - 1 - k)
    return rank


def locate_cell(y) -> np.ndarray:
    """Permutation(s) of the Kuhn cell containing normalized point(s) ``y``.

    Ties are broken by coordinate index (stable sort), so every point of the
    closed cube gets exactly one cell.
    """
    y = np.asarray(y, dtype=float)
    return np.argsort(y, axis=-1, kind="stable")


def affine_image_of_cell(cell: KuhnCell, box: BoxDomain) -> SimplexDomain:
    if cell.dim != box.dim:
        raise DomainError(f"cell has dimension {cell.dim}, box has dimension {box.dim}")
    return SimplexDomain(box.v0_array[None, :] + float(box.u) * cell.vertices)
