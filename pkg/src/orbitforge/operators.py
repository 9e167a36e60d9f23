"""Operator models acting exactly on windowed vectors.

Five kinds: bilateral and unilateral weighted shifts, diagonal unitaries,
finite multiplication grids, and dense matrices.  The first four act lazily on
:class:`~orbitforge.vectors.WindowVector` supports of any size; dense matrices
act on vectors whose support fits their dimension.  Every model reports a
certified upper bound for its operator norm, which downstream constructions
use in their schedule formulas.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    ResolutionError,
    UnsupportedModelError,
)
from .vectors import WindowVector, inner

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# weight rules for shifts


class ConstantWeights:
    def __init__(self, value):
        self.value = complex(value)
        if self.value == 0:
            raise DegenerateInputError("shift weight must be nonzero")

    def at(self, indices):
        return np.full(len(indices), self.value, np.complex128)

    def sup_modulus(self):
        return abs(self.value)

    def constant_modulus(self):
        return abs(self.value)

    def modulus_limits(self):
        m = abs(self.value)
        return (m, m)

    def to_json(self):
        return {"kind": "constant", "value": [self.value.real, self.value.imag]}


class PeriodicWeights:
    def __init__(self, values):
        self.values = np.asarray(list(values), np.complex128)
        if len(self.values) == 0 or np.any(self.values == 0):
            raise DegenerateInputError("periodic weights must be nonempty and nonzero")

    def at(self, indices):
        return self.values[np.mod(indices, len(self.values))]

    def sup_modulus(self):
        return float(np.max(np.abs(self.values)))

    def constant_modulus(self):
        mods = np.abs(self.values)
        if np.max(mods) - np.min(mods) == 0.0:
            return float(mods[0])
        return None

    def modulus_limits(self):
        return None

    def geometric_mean_modulus(self):
        return float(np.exp(np.mean(np.log(np.abs(self.values)))))

    def to_json(self):
        return {
            "kind": "periodic",
            "values": [[v.real, v.imag] for v in self.values],
        }


class FunctionWeights:
    """Arbitrary weight sequence given by a vectorized callable.

    ``sup_modulus`` must be a declared, trusted bound: the catalogue and the
    norm certificates lean on it and nothing here can verify it.  Declared
    modulus limits at -inf/+inf unlock the spectral catalogue entries.
    """

    def __init__(self, fn, sup_modulus, limit_neg=None, limit_pos=None, inf_modulus=None):
        self.fn = fn
        self._sup = float(sup_modulus)
        self.limit_neg = None if limit_neg is None else float(limit_neg)
        self.limit_pos = None if limit_pos is None else float(limit_pos)
        self.inf_modulus = None if inf_modulus is None else float(inf_modulus)
        if self._sup <= 0:
            raise DegenerateInputError("declared sup modulus must be positive")

    def at(self, indices):
        return np.asarray(self.fn(indices), np.complex128)

    def sup_modulus(self):
        return self._sup

    def constant_modulus(self):
        return None

    def modulus_limits(self):
        if self.limit_neg is None or self.limit_pos is None:
            return None
        return (self.limit_neg, self.limit_pos)

    def to_json(self):
        raise UnsupportedModelError("function-defined weights have no serial form")


def weights_from_json(obj):
    if obj is None:
        return None
    kind = obj.get("kind")
    if kind == "constant":
        re, im = obj["value"]
        return ConstantWeights(complex(re, im))
    if kind == "periodic":
        return PeriodicWeights(complex(re, im) for re, im in obj["values"])
    raise UnsupportedModelError(f"unknown weight rule kind {kind!r}")


# ---------------------------------------------------------------------------
# phase rules for diagonal unitaries


class QuadraticIrrationalRotation:
    """Phases theta_k = 2*pi*frac(k*alpha) for alpha = (a + b*sqrt(d)) / c.

    The fractional parts are computed in integer arithmetic: with M guard bits
    and S = isqrt(d * 4**M) we have |S - sqrt(d)*2**M| < 1, so

        frac(k*alpha) = ((k*a*2**M + k*b*S) mod (c*2**M)) / (c*2**M)

    up to an absolute error below |k*b| * 2**-M / c.  With M = 160 the error
    stays under 1e-28 for any int64 index, far below float64 resolution, so
    the float phases handed to numpy are exact-to-rounding and, crucially,
    reproducible: two runs can never disagree about a phase.

    The default alpha = sqrt(2) - 1 is badly approximable, which keeps the
    orbit of phases uniformly spread at every scale.
    """

    PRECISION_BITS = 160

    def __init__(self, a=-1, b=1, c=1, d=2):
        a, b, c, d = int(a), int(b), int(c), int(d)
        if c <= 0:
            raise DegenerateInputError("denominator c must be positive")
        if b == 0:
            raise DegenerateInputError("b = 0 gives a rational rotation")
        if d < 2 or math.isqrt(d) ** 2 == d:
            raise DegenerateInputError("d must be a non-square integer >= 2")
        self.a, self.b, self.c, self.d = a, b, c, d
        M = self.PRECISION_BITS
        sqrt_scaled = math.isqrt(d << (2 * M))
        self._den = c << M
        # residue of alpha*2**M*c ... one multiply + one mod per index
        self._num = ((a << M) + b * sqrt_scaled) % self._den

    def frac_exact(self, k):
        """(numerator, denominator) of frac(k*alpha) in the fixed-point model."""
        return (int(k) * self._num) % self._den, self._den

    def phases(self, indices):
        den = self._den
        num = self._num
        return np.array(
            [TWO_PI * (((int(k) * num) % den) / den) for k in indices], np.float64
        )

    def alpha_float(self):
        return (self.a + self.b * math.sqrt(self.d)) / self.c

    def find_index(self, target_turn, tol_turn, k_max=10 ** 12, exclude=()):
        """Smallest index k >= 1 with frac(k*alpha) within tol_turn of target.

        Turns, not radians: target_turn in [0, 1), tol_turn > 0.  Exclusions
        let callers reserve indices already in use.  Coarse tolerances go
        through a vectorized float scan; below 1e-6 of a turn the scan would
        need ~1/tol steps of exact arithmetic, so a baby-step giant-step table
        on the fixed-point residues finds the hit in ~sqrt(1/tol) work.  The
        returned index is verified against the exact residue before handing
        it out, whichever path produced it.
        """
        target_turn = float(target_turn) % 1.0
        tol_turn = float(tol_turn)
        if tol_turn <= 0:
            raise DegenerateInputError("tolerance must be positive")
        exclude = frozenset(int(k) for k in exclude)
        den = self._den
        num = self._num
        tau = int(tol_turn * den)
        if tau < 1:
            raise DegenerateInputError("tolerance below the fixed-point resolution")
        t_res = int(target_turn * den)

        def _verify(k):
            e = (k * num - t_res) % den
            return min(e, den - e) <= tau

        if tol_turn >= 1e-6:
            alpha = self.alpha_float()
            chunk = 1 << 17
            lo = 1
            while lo <= k_max:
                hi = min(lo + chunk, k_max + 1)
                ks = np.arange(lo, hi, dtype=np.int64)
                d = np.abs(np.mod(ks * alpha - target_turn + 0.5, 1.0) - 0.5)
                hits = ks[d <= tol_turn * 0.999]
                for k in hits:
                    k = int(k)
                    if k not in exclude and _verify(k):
                        return k
                lo = hi
            raise ResolutionError(
                f"no index within {tol_turn:g} turns of the target below {k_max}"
            )

        baby = max(2, math.isqrt(int(1.0 / tol_turn)) + 1)
        giants = min(k_max // baby + 1, int(4.0 / (tol_turn * baby)) + 2)
        bucket = max(tau, 1)
        table: dict = {}
        for j in range(baby):
            res = (j * num) % den
            table.setdefault(res // bucket, []).append(j)
        step = (baby * num) % den
        for i in range(giants):
            # solve j*num ≡ t_res - i*step (mod den) within tau
            want = (t_res - i * step) % den
            base_bucket = want // bucket
            for bb in (base_bucket - 1, base_bucket, base_bucket + 1):
                for j in table.get(bb % ((den // bucket) + 1), ()):
                    k = i * baby + j
                    if k < 1 or k > k_max or k in exclude:
                        continue
                    if _verify(k):
                        return k
        raise ResolutionError(
            f"no index within {tol_turn:g} turns of the target below {baby * giants}"
        )

    def to_json(self):
        return {
            "kind": "quadratic_irrational",
            "a": self.a,
            "b": self.b,
            "c": self.c,
            "d": self.d,
        }


class PeriodicPhases:
    def __init__(self, phases):
        self.values = np.asarray(list(phases), np.float64)
        if len(self.values) == 0:
            raise DegenerateInputError("need at least one phase")

    def phases(self, indices):
        return self.values[np.mod(indices, len(self.values))]

    def to_json(self):
        return {"kind": "periodic", "phases": [float(p) for p in self.values]}


def phase_rule_from_json(obj):
    kind = obj.get("kind")
    if kind == "quadratic_irrational":
        return QuadraticIrrationalRotation(obj["a"], obj["b"], obj["c"], obj["d"])
    if kind == "periodic":
        return PeriodicPhases(obj["phases"])
    raise UnsupportedModelError(f"unknown phase rule kind {kind!r}")


# ---------------------------------------------------------------------------
# operator models


def _require_nonnegative_support(v):
    if len(v.indices) and v.indices[0] < 0:
        raise DimensionMismatchError("vector has support outside N")


class BilateralShift:
    """(S x)_{i+1} = w_i x_i on the integer line."""

    index_set = "Z"
    dim = None
    kind = "bilateral_shift"

    def __init__(self, weights=None):
        self.weights = weights

    def apply(self, v):
        if self.weights is not None:
            v = v.scale_by(self.weights.at)
        return v.translate(1)

    def apply_adjoint(self, v):
        v = v.translate(-1)
        if self.weights is not None:
            return v.scale_by(lambda idx: np.conj(self.weights.at(idx)))
        return v

    def norm_bound(self):
        return 1.0 if self.weights is None else self.weights.sup_modulus()

    def is_unitary(self):
        return self.weights is None or self.weights.constant_modulus() == 1.0

    def to_json(self):
        w = None if self.weights is None else self.weights.to_json()
        return {"kind": self.kind, "params": {"weights": w}}


class UnilateralShift:
    """(S x)_{i+1} = w_i x_i on the half line; the adjoint kills index 0."""

    index_set = "N"
    dim = None
    kind = "unilateral_shift"

    def __init__(self, weights=None):
        self.weights = weights

    def apply(self, v):
        _require_nonnegative_support(v)
        if self.weights is not None:
            v = v.scale_by(self.weights.at)
        return v.translate(1)

    def apply_adjoint(self, v):
        _require_nonnegative_support(v)
        v = v.translate(-1).restrict(lambda idx: idx >= 0)
        if self.weights is not None:
            return v.scale_by(lambda idx: np.conj(self.weights.at(idx)))
        return v

    def norm_bound(self):
        return 1.0 if self.weights is None else self.weights.sup_modulus()

    def is_unitary(self):
        return False

    def to_json(self):
        w = None if self.weights is None else self.weights.to_json()
        return {"kind": self.kind, "params": {"weights": w}}


class DiagonalUnitary:
    """T e_k = exp(i*theta_k) e_k with phases from a rule."""

    dim = None
    kind = "diagonal_unitary"

    def __init__(self, phase_rule, index_set="Z"):
        if index_set not in ("Z", "N"):
            raise DegenerateInputError("index_set must be 'Z' or 'N'")
        self.phase_rule = phase_rule
        self.index_set = index_set

    def _factors(self, indices):
        return np.exp(1j * self.phase_rule.phases(indices))

    def apply(self, v):
        if self.index_set == "N":
            _require_nonnegative_support(v)
        return v.scale_by(self._factors)

    def apply_adjoint(self, v):
        if self.index_set == "N":
            _require_nonnegative_support(v)
        return v.scale_by(lambda idx: np.conj(self._factors(idx)))

    def norm_bound(self):
        return 1.0

    def is_unitary(self):
        return True

    def to_json(self):
        return {
            "kind": self.kind,
            "params": {"phases": self.phase_rule.to_json(), "index_set": self.index_set},
        }


class MultiplicationGrid:
    """Multiplication by z on an n-point uniform grid of the unit circle.

    Coordinates already absorb the square root of the node measure, so the
    operator itself is the plain diagonal diag(exp(2*pi*i*k/n)) regardless of
    the measure; the measure only matters when embedding function values.
    """

    index_set = "finite"
    kind = "multiplication_grid"

    def __init__(self, n_nodes, measure=None):
        n_nodes = int(n_nodes)
        if n_nodes < 1:
            raise DegenerateInputError("need at least one node")
        self.dim = n_nodes
        if measure is None:
            self.measure = np.full(n_nodes, 1.0 / n_nodes)
        else:
            m = np.asarray(measure, np.float64)
            if len(m) != n_nodes or np.any(m < 0) or m.sum() == 0:
                raise DegenerateInputError("measure must be nonnegative, length n_nodes")
            self.measure = m / m.sum()
        self.measure.setflags(write=False)

    def node_phases(self, indices):
        return TWO_PI * (np.asarray(indices, np.float64) / self.dim)

    def _check(self, v):
        if len(v.indices) and (v.indices[0] < 0 or v.indices[-1] >= self.dim):
            raise DimensionMismatchError("vector support outside the grid")

    def apply(self, v):
        self._check(v)
        return v.scale_by(lambda idx: np.exp(1j * self.node_phases(idx)))

    def apply_adjoint(self, v):
        self._check(v)
        return v.scale_by(lambda idx: np.exp(-1j * self.node_phases(idx)))

    def embed(self, values):
        """Grid vector of a function: pointwise values weighted by sqrt(measure)."""
        values = np.asarray(values, np.complex128)
        if len(values) != self.dim:
            raise DimensionMismatchError("need one value per node")
        return WindowVector.from_dense(values * np.sqrt(self.measure))

    def norm_bound(self):
        return 1.0

    def is_unitary(self):
        return True

    def to_json(self):
        return {
            "kind": self.kind,
            "params": {"n_nodes": self.dim, "measure": [float(x) for x in self.measure]},
        }


class DenseOperator:
    index_set = "finite"
    kind = "dense"

    def __init__(self, matrix):
        m = np.array(matrix, np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] == 0:
            raise DegenerateInputError("need a nonempty square matrix")
        m.setflags(write=False)
        self.matrix = m
        self.dim = m.shape[0]
        self._norm_bound = None

    def apply(self, v):
        return WindowVector.from_dense(self.matrix @ v.to_dense(self.dim))

    def apply_adjoint(self, v):
        return WindowVector.from_dense(self.matrix.conj().T @ v.to_dense(self.dim))

    def norm_bound(self):
        """Certified upper bound for the spectral norm.

        Power iteration on A*A gives the sharp estimate; the Frobenius norm and
        sqrt(norm_1 * norm_inf) clamp it from above, so the returned value is an
        upper bound even if the iteration stalled on a bad start.
        """
        if self._norm_bound is None:
            a = self.matrix
            frob = float(np.linalg.norm(a))
            n1 = float(np.max(np.sum(np.abs(a), axis=0)))
            ninf = float(np.max(np.sum(np.abs(a), axis=1)))
            cap = min(frob, math.sqrt(n1 * ninf))
            rng = np.random.default_rng(7)
            x = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
            x /= np.linalg.norm(x)
            est = 0.0
            for _ in range(300):
                y = a.conj().T @ (a @ x)
                ny = float(np.linalg.norm(y))
                if ny == 0.0:
                    est = 0.0
                    break
                new = math.sqrt(ny)
                x = y / ny
                if abs(new - est) <= 1e-12 * max(new, 1.0):
                    est = new
                    break
                est = new
            self._norm_bound = min(est * (1.0 + 1e-6) + 1e-6, cap)
        return self._norm_bound

    def is_unitary(self):
        eye = np.eye(self.dim)
        return bool(np.allclose(self.matrix.conj().T @ self.matrix, eye, atol=1e-12))

    def to_json(self):
        return {
            "kind": self.kind,
            "params": {
                "matrix": [[[z.real, z.imag] for z in row] for row in self.matrix]
            },
        }


class OperatorPower:
    """T^n as a first-class operator, applied factor by factor."""

    kind = "power"

    def __init__(self, base, exponent):
        exponent = int(exponent)
        if exponent < 1:
            raise DegenerateInputError("exponent must be a positive integer")
        if isinstance(base, OperatorPower):
            exponent *= base.exponent
            base = base.base
        self.base = base
        self.exponent = exponent

    @property
    def index_set(self):
        return self.base.index_set

    @property
    def dim(self):
        return self.base.dim

    def apply(self, v):
        return apply_power(self.base, v, self.exponent)

    def apply_adjoint(self, v):
        for _ in range(self.exponent):
            v = self.base.apply_adjoint(v)
        return v

    def norm_bound(self):
        return self.base.norm_bound() ** self.exponent

    def is_unitary(self):
        return self.base.is_unitary()

    def to_json(self):
        return {
            "kind": self.kind,
            "params": {"base": self.base.to_json(), "exponent": self.exponent},
        }


def power_tuple(op, n):
    """(T, T^2, ..., T^n)."""
    n = int(n)
    if n < 1:
        raise DegenerateInputError("need at least one power")
    return tuple(OperatorPower(op, j) for j in range(1, n + 1))


def as_power(op):
    """(base, exponent) view of an operator, unwrapping power wrappers."""
    if isinstance(op, OperatorPower):
        return op.base, op.exponent
    return op, 1


def operator_from_json(obj):
    kind = obj.get("kind")
    params = obj.get("params", {})
    if kind == "power":
        return OperatorPower(operator_from_json(params["base"]), params["exponent"])
    if kind == "bilateral_shift":
        return BilateralShift(weights_from_json(params.get("weights")))
    if kind == "unilateral_shift":
        return UnilateralShift(weights_from_json(params.get("weights")))
    if kind == "diagonal_unitary":
        return DiagonalUnitary(
            phase_rule_from_json(params["phases"]), params.get("index_set", "Z")
        )
    if kind == "multiplication_grid":
        return MultiplicationGrid(params["n_nodes"], params.get("measure"))
    if kind == "dense":
        matrix = [[complex(re, im) for re, im in row] for row in params["matrix"]]
        return DenseOperator(matrix)
    raise UnsupportedModelError(f"unknown operator kind {kind!r}")


SHIFT_KINDS = (BilateralShift, UnilateralShift)


def apply_power(op, v, n):
    """T^n v, applied factor by factor.

    Plain shifts get a direct index offset, which is the same arithmetic as n
    single steps (translation is exact), just without n intermediate arrays.
    Everything else really is applied n times so that float rounding matches a
    step-by-step computation bit for bit.
    """
    n = int(n)
    if n < 0:
        raise DegenerateInputError("power must be nonnegative")
    if n == 0:
        return v
    if isinstance(op, SHIFT_KINDS) and op.weights is None:
        if isinstance(op, UnilateralShift):
            _require_nonnegative_support(v)
        return v.translate(n)
    for _ in range(n):
        v = op.apply(v)
    return v


def same_space(ops):
    """True when all operators act on one index set (and dimension)."""
    ops = list(ops)
    if not ops:
        return True
    first = (ops[0].index_set, ops[0].dim)
    return all((op.index_set, op.dim) == first for op in ops)


def require_same_space(ops):
    if not same_space(ops):
        raise DimensionMismatchError("operators act on different spaces")


# ---------------------------------------------------------------------------
# subspaces and compressions


class Subspace:
    """Span of finitely many windowed vectors, kept as an orthonormal basis.

    Orthonormalization is classical Gram-Schmidt with one full
    re-orthogonalization pass per vector ("twice is enough"): a single pass
    loses orthogonality at the scale of the condition number, the repeat pass
    brings the Gram defect down to a few ulps, which the certificates later
    re-measure from the raw vectors.  Vectors whose remainder falls below
    ``tol`` times their norm are treated as dependent and dropped.
    """

    __slots__ = ("basis",)

    def __init__(self, basis):
        self.basis = tuple(basis)

    @classmethod
    def span(cls, vectors, tol=1e-8):
        basis = []
        for v in vectors:
            scale = v.norm()
            if scale == 0.0:
                continue
            w = v
            for _ in range(2):
                for b in basis:
                    w = w - inner(w, b) * b
            n = w.norm()
            if n > tol * scale:
                basis.append(w * (1.0 / n))
        return cls(basis)

    @property
    def dim(self):
        return len(self.basis)

    def project(self, v):
        out = WindowVector.zero()
        for b in self.basis:
            out = out + inner(v, b) * b
        return out

    def complement_part(self, v):
        """v minus its projection (one extra sweep to polish orthogonality)."""
        for _ in range(2):
            for b in self.basis:
                v = v - inner(v, b) * b
        return v

    def contains(self, v, tol=1e-8):
        r = self.complement_part(v).norm()
        return r <= tol * max(v.norm(), 1.0)


def compress(op, subspace):
    """Matrix of the compression P_L T P_L in the subspace basis."""
    k = subspace.dim
    out = np.zeros((k, k), np.complex128)
    for j, b in enumerate(subspace.basis):
        tb = op.apply(b)
        for i, c in enumerate(subspace.basis):
            out[i, j] = inner(tb, c)
    return out
