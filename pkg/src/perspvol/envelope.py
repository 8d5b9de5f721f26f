"""Concave upper bounds on a box: the best constant and the concave envelope.

For a function that is supermodular on the box vertices, the concave
envelope over the box is the piecewise-linear interpolant of the vertex
values on the Kuhn triangulation ``v0 + u * Delta_perm``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator

import numpy as np

from .errors import CombinatorialBlowupError, DomainError, SupermodularityError
from .functions import (
    SUBSET_CAP,
    SUPERMODULAR_CAP,
    LinearFormFunction,
    PowerLinearForm,
    is_exact_power,
    is_supermodular_on_vertices,
    vertex_values,
)
from .geometry import KUHN_CAP, BoxDomain, chain_masks, kuhn_permutations, locate_cell, permutation_rank


@dataclass(frozen=True)
class ConstantBound:
    F: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], float(self.F)) if x.ndim > 1 else float(self.F)


def constant_bound(f: LinearFormFunction, box: BoxDomain) -> ConstantBound:
    """``F = f(v0 + u 1)``, the maximum of a nondecreasing ``f`` over the box."""
    if f.dim != box.dim:
        raise DomainError(f"function has dimension {f.dim}, box has {box.dim}")
    if is_exact_power(f, box.v0, box.u):
        return ConstantBound(f.exact([v + box.u for v in box.v0]))
    return ConstantBound(float(f(box.vertex(2**box.dim - 1))))


@dataclass(frozen=True)
class EnvelopeCell:
    perm: tuple
    vertices: np.ndarray
    gradient: np.ndarray
    offset: float

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.gradient + self.offset

    def to_dict(self) -> dict:
        return {
            "permutation": list(self.perm),
            "vertices": self.vertices.tolist(),
            "gradient": self.gradient.tolist(),
            "offset": float(self.offset),
        }


class PiecewiseLinearEnvelope:
    """Affine pieces over the cells of the scaled Kuhn triangulation.

    Pieces are held as arrays (``perms``, ``gradients``, ``offsets``) indexed by
    lexicographic cell rank; ``cells()`` materializes them one at a time.
    """

    def __init__(self, box: BoxDomain, perms, gradients, offsets, vertex_values):
        self.box = box
        self.perms = perms
        self.gradients = gradients
        self.offsets = offsets
        self.vertex_values = vertex_values
        for a in (perms, gradients, offsets, vertex_values):
            a.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.box.dim

    def __len__(self) -> int:
        return self.perms.shape[0]

    def cell(self, index: int) -> EnvelopeCell:
        perm = tuple(int(i) for i in self.perms[index])
        verts = np.array([self.box.vertex(m) for m in chain_masks(perm)])
        return EnvelopeCell(perm, verts, self.gradients[index].copy(), float(self.offsets[index]))

    def cells(self) -> Iterator[EnvelopeCell]:
        return (self.cell(i) for i in range(len(self)))

    def locate(self, x) -> np.ndarray:
        y = (np.asarray(x, dtype=float) - self.box.v0_array) / float(self.box.u)
        return permutation_rank(locate_cell(np.atleast_2d(y)))

    def __call__(self, x):
        return evaluate_envelope(self, x)

    def to_dict(self) -> dict:
        return {"box": self.box.to_dict(), "cells": [c.to_dict() for c in self.cells()]}


def concave_envelope(
    f: LinearFormFunction, box: BoxDomain, cap: int = KUHN_CAP, check: bool = True
) -> PiecewiseLinearEnvelope:
    """Concave envelope of ``f`` on the box as a Kuhn-cell interpolant.

    Along the chain ``w_0, ..., w_d`` of cell ``perm`` consecutive vertices
    differ in coordinate ``perm[d-j]``, so that gradient entry is the vertex
    value difference divided by ``u`` (forward substitution, no linear solve).
    """
    d = box.dim
    if f.dim != d:
        raise DomainError(f"function has dimension {f.dim}, box has {d}")
    perms = kuhn_permutations(d, cap)
    if check and not is_supermodular_on_vertices(f, box, max(cap, SUPERMODULAR_CAP)):
        raise SupermodularityError(
            f"{type(f).__name__} is not supermodular on the box vertices; "
            "the Kuhn interpolant is not its concave envelope"
        )
    F = vertex_values(f, box)
    u = float(box.u)
    masks = np.zeros((perms.shape[0], d + 1), dtype=np.int64)
    grads = np.empty((perms.shape[0], d))
    rows = np.arange(perms.shape[0])
    for j in range(1, d + 1):
        coord = perms[:, d - j]
        masks[:, j] = masks[:, j - 1] | (1 << coord)
        grads[rows, coord] = (F[masks[:, j]] - F[masks[:, j - 1]]) / u
    offsets = F[0] - grads @ box.v0_array
    return PiecewiseLinearEnvelope(box, perms, grads, offsets, F)


def evaluate_envelope(env: PiecewiseLinearEnvelope, x, tol: float = 1e-12):
    """Value of the envelope at point(s) ``x`` inside the box."""
    x = np.asarray(x, dtype=float)
    pts = np.atleast_2d(x)
    if pts.shape[-1] != env.dim:
        raise DomainError(f"point has dimension {pts.shape[-1]}, envelope has {env.dim}")
    if not np.all(env.box.contains(pts, tol)):
        raise DomainError("point lies outside the box")
    idx = env.locate(pts)
    vals = np.einsum("ij,ij->i", pts, env.gradients[idx]) + env.offsets[idx]
    return float(vals[0]) if x.ndim == 1 else vals


def _subset_weights(d: int) -> np.ndarray:
    sizes = np.array([bin(m).count("1") for m in range(2**d)])
    fact = np.array([math.factorial(k) for k in range(d + 1)], dtype=float)
    return fact[sizes] * fact[d - sizes]


def integrate_envelope(f_or_env, box: BoxDomain | None = None, check: bool = True, cap: int = SUBSET_CAP):
    """``int_Q conc(f) = u^d/(d+1)! * sum_S |S|! (d-|S|)! f(v0 + u 1_S)``.

    Accepts a function with its box, or a constructed envelope. Exact for
    integer power forms with rational data.
    """
    if isinstance(f_or_env, PiecewiseLinearEnvelope):
        box = f_or_env.box
        F = f_or_env.vertex_values
        d = box.dim
    else:
        f = f_or_env
        if box is None:
            raise TypeError("a box is required when integrating from a function")
        d = box.dim
        if d > cap:
            raise CombinatorialBlowupError(f"2^{d} subsets for d={d}, above the cap d <= {cap}")
        if check and not is_supermodular_on_vertices(f, box, max(SUPERMODULAR_CAP, min(d, cap))):
            raise SupermodularityError("function is not supermodular on the box vertices")
        if is_exact_power(f, box.v0, box.u):
            return _integrate_envelope_exact(f, box)
        F = vertex_values(f, box)
    u = float(box.u)
    terms = (_subset_weights(d) * F).tolist()
    return u**d / math.factorial(d + 1) * math.fsum(terms)


def _integrate_envelope_exact(f: PowerLinearForm, box: BoxDomain) -> Fraction:
    d = box.dim
    total = Fraction(0)
    for m in range(2**d):
        x = [v + box.u * ((m >> i) & 1) for i, v in enumerate(box.v0)]
        k = bin(m).count("1")
        total += math.factorial(k) * math.factorial(d - k) * f.exact(x)
    return Fraction(box.u) ** d / math.factorial(d + 1) * total


def integrate_envelope_by_cells(env: PiecewiseLinearEnvelope) -> float:
    """Sum over cells of cell volume times the mean of the cell's vertex values."""
    d = env.dim
    vol = float(env.box.u) ** d / math.factorial(d)
    total = []
    for perm in env.perms:
        total.append(vol * float(np.mean(env.vertex_values[chain_masks(perm)])))
    return math.fsum(total)
