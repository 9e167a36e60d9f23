"""Windowed vectors over an integer index set.

A :class:`WindowVector` stores a finitely supported vector on the index set
``Z`` (or a subset of it) as a strictly increasing int64 index array plus a
complex128 value array.  Shift, diagonal and dense operators act on these
exactly: a shift translates the index array, nothing is ever truncated to a
finite box.  Truncating a shift silently turns it into a nilpotent matrix and
falsifies every spectral statement downstream, which is why the lazy
representation is load-bearing and not an optimization.

Inner products are linear in the FIRST slot: ``inner(u, v) = sum u_i *
conj(v_i)``.  All stored arrays are frozen (``writeable=False``).
"""

from __future__ import annotations

import os

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    WindowBudgetError,
)

WINDOW_BUDGET_ENV = "ORBITFORGE_WINDOW_BUDGET"
DEFAULT_WINDOW_BUDGET = 50_000_000

# translate() guards against int64 wraparound well before it could happen
_INDEX_LIMIT = np.int64(2) ** 62


def window_budget(override=None):
    """Resolve the stored-entry budget: explicit override, else env var, else default."""
    if override is not None:
        budget = int(override)
    else:
        raw = os.environ.get(WINDOW_BUDGET_ENV)
        budget = int(raw) if raw else DEFAULT_WINDOW_BUDGET
    if budget <= 0:
        raise DegenerateInputError(f"window budget must be positive, got {budget}")
    return budget


class BudgetMeter:
    """Counts stored entries across a construction and enforces a hard cap."""

    def __init__(self, limit=None):
        self.limit = window_budget(limit)
        self.used = 0

    def charge(self, entries):
        entries = int(entries)
        if self.used + entries > self.limit:
            raise WindowBudgetError(
                f"construction needs {self.used + entries} stored entries, "
                f"budget is {self.limit}",
                required=self.used + entries,
                budget=self.limit,
            )
        self.used += entries


def _freeze(arr):
    arr.setflags(write=False)
    return arr


class WindowVector:
    """Finitely supported complex vector indexed by integers.

    ``indices`` must be strictly increasing; use :meth:`from_pairs` when the
    input may contain duplicates or be unsorted.  Exact zeros are kept out of
    storage so that superpositions of disjoint windows stay compact; inexact
    small values are never pruned.
    """

    __slots__ = ("indices", "values")

    # keep numpy scalars from absorbing us elementwise: a bare complex128
    # times a WindowVector must dispatch to __rmul__, not np.asarray(self)
    __array_ufunc__ = None

    def __init__(self, indices, values, _checked=False):
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.complex128)
        if not _checked:
            if indices.ndim != 1 or values.ndim != 1 or len(indices) != len(values):
                raise DegenerateInputError("indices and values must be 1-d and equal length")
            if len(indices) > 1 and not np.all(np.diff(indices) > 0):
                raise DegenerateInputError("indices must be strictly increasing")
            keep = values != 0
            if not keep.all():
                indices = indices[keep]
                values = values[keep]
        self.indices = _freeze(indices if indices.flags.owndata else indices.copy())
        self.values = _freeze(values if values.flags.owndata else values.copy())

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls):
        return cls(np.empty(0, np.int64), np.empty(0, np.complex128), _checked=True)

    @classmethod
    def basis(cls, index):
        return cls(np.array([index], np.int64), np.array([1.0 + 0j]), _checked=True)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from an iterable of (index, value), summing duplicates."""
        items = list(pairs)
        if not items:
            return cls.zero()
        idx = np.array([p[0] for p in items], np.int64)
        val = np.array([p[1] for p in items], np.complex128)
        order = np.argsort(idx, kind="stable")
        idx, val = idx[order], val[order]
        uniq, start = np.unique(idx, return_index=True)
        summed = np.add.reduceat(val, start)
        return cls(uniq, summed)

    @classmethod
    def from_dense(cls, array, offset=0):
        array = np.asarray(array, np.complex128).ravel()
        idx = np.arange(offset, offset + len(array), dtype=np.int64)
        return cls(idx, array.copy())

    # -- basic queries ---------------------------------------------------

    def __len__(self):
        return len(self.indices)

    @property
    def nnz(self):
        return len(self.indices)

    def support_range(self):
        """(min_index, max_index) of the support; raises on the zero vector."""
        if len(self.indices) == 0:
            raise DegenerateInputError("zero vector has no support")
        return int(self.indices[0]), int(self.indices[-1])

    def norm(self):
        return float(np.linalg.norm(self.values))

    def __getitem__(self, index):
        pos = np.searchsorted(self.indices, index)
        if pos < len(self.indices) and self.indices[pos] == index:
            return complex(self.values[pos])
        return 0j

    def to_dense(self, n, offset=0):
        """Dense length-n array; support must sit inside [offset, offset+n)."""
        out = np.zeros(n, np.complex128)
        if len(self.indices):
            lo, hi = self.support_range()
            if lo < offset or hi >= offset + n:
                raise DimensionMismatchError(
                    f"support [{lo}, {hi}] does not fit in [{offset}, {offset + n})"
                )
            out[self.indices - offset] = self.values
        return out

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        return add_scaled(self, other, 1.0, 1.0)

    def __sub__(self, other):
        return add_scaled(self, other, 1.0, -1.0)

    def __mul__(self, scalar):
        if len(self.values) == 0 or scalar == 1:
            return self
        return WindowVector(self.indices, self.values * scalar, _checked=True)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def __neg__(self):
        return self * (-1.0)

    def conj(self):
        return WindowVector(self.indices, np.conj(self.values), _checked=True)

    def translate(self, k):
        """Shift every index by k (exact; the value array is shared)."""
        if len(self.indices) == 0 or k == 0:
            return self
        if abs(int(self.indices[0]) + k) >= _INDEX_LIMIT or abs(int(self.indices[-1]) + k) >= _INDEX_LIMIT:
            raise DimensionMismatchError("index translation would overflow the index set")
        return WindowVector(self.indices + np.int64(k), self.values, _checked=True)

    def restrict(self, keep_mask_fn):
        """Keep only indices where keep_mask_fn(indices) is True (vectorized)."""
        mask = keep_mask_fn(self.indices)
        return WindowVector(self.indices[mask], self.values[mask], _checked=True)

    def scale_by(self, factor_fn):
        """Multiply each value by factor_fn(indices) (vectorized, exact length)."""
        factors = np.asarray(factor_fn(self.indices), np.complex128)
        return WindowVector(self.indices, self.values * factors, _checked=True)

    # -- comparison -------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, WindowVector):
            return NotImplemented
        return (
            len(self) == len(other)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.indices.tobytes(), self.values.tobytes()))

    def __repr__(self):
        if len(self) == 0:
            return "WindowVector(zero)"
        lo, hi = self.support_range()
        return f"WindowVector({len(self)} entries on [{lo}, {hi}], norm={self.norm():.6g})"

    # -- serialization ----------------------------------------------------

    def to_entries(self):
        return [
            [int(i), float(v.real), float(v.imag)]
            for i, v in zip(self.indices, self.values)
        ]

    @classmethod
    def from_entries(cls, entries):
        return cls.from_pairs((int(i), complex(re, im)) for i, re, im in entries)


def add_scaled(u, v, alpha, beta):
    """alpha*u + beta*v with a single sorted merge."""
    if len(u) == 0:
        return v * beta
    if len(v) == 0:
        return u * alpha
    idx = np.concatenate([u.indices, v.indices])
    val = np.concatenate([u.values * alpha, v.values * beta])
    order = np.argsort(idx, kind="stable")
    idx, val = idx[order], val[order]
    uniq, start = np.unique(idx, return_index=True)
    summed = np.add.reduceat(val, start)
    return WindowVector(uniq, summed)


def inner(u, v):
    """<u, v> = sum_i u_i * conj(v_i)  (linear in the first slot)."""
    if len(u) == 0 or len(v) == 0:
        return 0j
    common, iu, iv = np.intersect1d(
        u.indices, v.indices, assume_unique=True, return_indices=True
    )
    if len(common) == 0:
        return 0j
    return complex(np.sum(u.values[iu] * np.conj(v.values[iv])))


def gram(vectors):
    """Gram matrix G[i, j] = <v_i, v_j> of a finite family."""
    vectors = list(vectors)
    k = len(vectors)
    out = np.zeros((k, k), np.complex128)
    for i in range(k):
        out[i, i] = vectors[i].norm() ** 2
        for j in range(i + 1, k):
            g = inner(vectors[i], vectors[j])
            out[i, j] = g
            out[j, i] = np.conj(g)
    return out


def normalize(v):
    n = v.norm()
    if n == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return v * (1.0 / n)


def distance(u, v):
    return (u - v).norm()


def vector_to_json(v, kind="raw", params=None):
    return {"kind": kind, "params": dict(params or {}), "entries": v.to_entries()}


def vector_from_json(obj):
    try:
        entries = obj["entries"]
    except (TypeError, KeyError) as exc:
        raise DegenerateInputError(f"not a vector object: {exc}") from exc
    return WindowVector.from_entries(entries)
