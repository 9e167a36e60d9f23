"""Vectors and subspaces on which all powers of T compress to almost zero.

The target quantity is sup over n >= 1 of |<T^n x, x>| (and its subspace
version sup_n ||P_L T^n P_L||).  On plain shift models the supremum is made
finite and exact by combinatorics instead of analysis: x is an equal-weight
mix of s basis atoms placed on a Sidon set, a set of integers whose pairwise
differences are all distinct.  Shifting by n then aligns at most one atom
pair, so

    |<T^n x, x>| <= 1/s      for every n >= 1,

with equality exactly at the realized differences, and exact zero beyond the
support span.  Choosing s > 16 K^2 / eps^2 leaves a wide margin under eps.

The subspace construction draws all stages from one shared Sidon pool: any
two atoms in the pool, whatever their stages, realize each difference at most
once, so every cross-stage compression entry is at most 1/sqrt(s_i s_j) in
modulus with no separation argument needed.  Stage chunks are offset upward
so later vectors are exactly orthogonal to the earlier ones and to their
power images over the declared horizon.

Models whose powers do not vanish weakly (diagonal unitaries, grid
multiplications) are refused with the probe evidence.  A supremum over all n
is never reported unless it can be certified exactly, which also rules out
weighted shifts here: their power forms carry weight products over
astronomically many steps that nothing in the run recomputes honestly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    DegenerateInputError,
    NumericalError,
    PreconditionError,
    UnsupportedModelError,
)
from .nrange import numerical_radius
from .operators import (
    BilateralShift,
    DenseOperator,
    DiagonalUnitary,
    MultiplicationGrid,
    Subspace,
    UnilateralShift,
    apply_power,
)
from .spectra import hull_contains_zero, spectral_descriptor
from .vectors import BudgetMeter, WindowVector, inner

__all__ = [
    "DecayProfile",
    "FlatSchedule",
    "flat_report_csv",
    "flat_subspace",
    "flat_vector",
    "next_prime",
    "sidon_set",
    "spectral_precondition",
    "weak_decay_probe",
]


# -- primes and Sidon sets ----------------------------------------------------

_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def _is_prime(n):
    """Deterministic Miller-Rabin, exact for any 64-bit integer."""
    if n < 2:
        return False
    for p in _MR_BASES:
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime(n):
    n = max(int(n), 2)
    while not _is_prime(n):
        n += 1
    return n


def sidon_set(size):
    """First ``size`` elements of an explicit Sidon set, strictly increasing.

    Uses b_j = 2 p j + (j^2 mod p) for a prime p >= size; all pairwise
    differences are distinct, the classical quadratic construction.  Elements
    stay below 2 p^2 + p, well inside int64 for any realistic size.
    """
    size = int(size)
    if size < 1:
        raise DegenerateInputError("need a positive set size")
    p = next_prime(size)
    j = np.arange(size, dtype=np.int64)
    return 2 * p * j + (j * j) % p


# -- decay probing -------------------------------------------------------------


@dataclass(frozen=True)
class DecayProfile:
    """Finite-horizon record of max |<T^n a, b>| over probe pairs.

    ``power_bound`` certifies sup ||T^n|| over the horizon.  For banded
    models ``exact_zero_beyond`` is the index past which every probe inner
    product vanishes identically, a statement about supports rather than
    magnitudes.
    """

    horizon: int
    ns: np.ndarray
    values: np.ndarray
    power_bound: float
    exact_zero_beyond: int | None

    @property
    def decays(self):
        if self.exact_zero_beyond is not None:
            return True
        tail = self.values[self.ns > self.horizon // 2]
        return bool(len(tail)) and float(np.max(tail)) <= 1e-8

    def to_json(self):
        return {
            "horizon": self.horizon,
            "probes": [[int(n), float(v)] for n, v in zip(self.ns, self.values)],
            "power_bound": self.power_bound,
            "exact_zero_beyond": self.exact_zero_beyond,
            "decays": self.decays,
        }


def _banded(op):
    return isinstance(op, (BilateralShift, UnilateralShift))


def weak_decay_probe(op, probe_vectors, horizon):
    """Measure max |<T^n a, b>| for n = 0..horizon over ordered probe pairs."""
    horizon = int(horizon)
    if horizon < 0:
        raise DegenerateInputError("horizon must be nonnegative")
    probes = list(probe_vectors)
    if not probes:
        raise DegenerateInputError("need at least one probe vector")
    for v in probes:
        if abs(v.norm() - 1.0) > 1e-9:
            raise DegenerateInputError("probe vectors must be unit")
    values = np.zeros(horizon + 1)
    orbits = list(probes)
    for n in range(horizon + 1):
        values[n] = max(abs(inner(a, b)) for a in orbits for b in probes)
        if n < horizon:
            orbits = [op.apply(a) for a in orbits]
    nb = op.norm_bound()
    power_bound = float(nb ** horizon) if nb > 1 else 1.0
    beyond = None
    if _banded(op):
        beyond = max(
            b.support_range()[1] - a.support_range()[0] + 1
            for a in probes
            for b in probes
        )
        beyond = max(beyond, 1)
    return DecayProfile(
        horizon=horizon,
        ns=np.arange(horizon + 1),
        values=values,
        power_bound=power_bound,
        exact_zero_beyond=beyond,
    )


def _flat_power_bound(op):
    """K = sup_n ||T^n||, exact for the supported models, else a refusal."""
    if _banded(op):
        if op.weights is None:
            return 1.0
        raise UnsupportedModelError(
            "weighted shifts tie each power form to a weight product over "
            "the whole hop; only the plain shifts carry the exact Sidon "
            "certificate"
        )
    if isinstance(op, (DiagonalUnitary, MultiplicationGrid)):
        profile = weak_decay_probe(op, [WindowVector.basis(0)], 16)
        raise PreconditionError(
            "powers do not vanish weakly: probe measured "
            f"|<T^n e_0, e_0>| = {float(np.max(profile.values[1:])):.3f} "
            f"persisting over horizon {profile.horizon}"
        )
    raise UnsupportedModelError(
        f"cannot certify a supremum over all powers for {type(op).__name__}"
    )


# -- schedules ------------------------------------------------------------------


@dataclass(frozen=True)
class FlatSchedule:
    """Stage bookkeeping: counts, exact thresholds, and separation times.

    thresholds[r] is the stage-r bound eps / (2^{r+3} (r+1)) kept as an
    exact Fraction; counts[r] is the smallest integer with
    counts[r] > 16 K^2 / thresholds[r]^2; times[r] is the first power beyond
    which everything built through stage r is supported too low to matter.
    """

    eps: float
    power_bound: float
    counts: tuple
    thresholds: tuple
    times: tuple

    @property
    def s(self):
        return sum(self.counts)

    def validate(self):
        k2 = Fraction(self.power_bound) ** 2
        for s_r, thr in zip(self.counts, self.thresholds):
            if not Fraction(s_r) * thr * thr > 16 * k2:
                raise NumericalError("stage count misses s > 16 K^2 / eps^2")
        if list(self.times) != sorted(set(self.times)):
            raise NumericalError("stage times must be strictly increasing")

    def to_json(self):
        return {
            "eps": self.eps,
            "power_bound": self.power_bound,
            "counts": list(self.counts),
            "thresholds": [str(t) for t in self.thresholds],
            "thresholds_float": [float(t) for t in self.thresholds],
            "times": list(self.times),
        }


def _stage_count(eps_fraction, power_bound):
    need = 16 * Fraction(power_bound) ** 2 / (eps_fraction * eps_fraction)
    return max(math.floor(need) + 1, 2)


def _stage_thresholds(eps, stages):
    e = Fraction(eps)
    return tuple(e / (2 ** (r + 3) * (r + 1)) for r in range(stages))


# -- flat vectors ----------------------------------------------------------------


def _sidon_mix(positions):
    s = len(positions)
    return WindowVector(positions, np.full(s, 1.0 / math.sqrt(s), np.complex128))


def _support_top(vectors):
    top = -1
    for v in vectors:
        if len(v.indices):
            top = max(top, int(v.indices[-1]))
    return top


def _form(op, x, n, against=None):
    """<T^n x, against> via the exact power fast path."""
    return inner(apply_power(op, x, n), x if against is None else against)


def flat_vector(op, eps, targets=(), avoid=(), window_budget=None, rng=None):
    """Unit x with sup over n >= 1 of |<T^n x, x>| below eps, verified.

    ``targets`` lists unit vectors a that the orbit must also avoid:
    |<T^n x, a>| and |<T^{*n} x, a>| stay below eps for every n >= 1.
    ``avoid`` spans the forbidden complement; x lands beyond those supports,
    hence exactly orthogonal.  The report carries the schedule, the measured
    suprema with the powers attaining them, and the exact-zero horizon.

    The adjoint guarantee holds when the targets are summable against the
    atoms: ||a||_1 <= eps sqrt(s) suffices.  The measured check is
    authoritative either way and fails loudly rather than extrapolating.
    """
    eps = float(eps)
    if eps <= 0:
        raise DegenerateInputError("eps must be positive")
    K = _flat_power_bound(op)
    targets = list(targets)
    for a in targets:
        if abs(a.norm() - 1.0) > 1e-9:
            raise DegenerateInputError("target vectors must be unit")
    meter = BudgetMeter(window_budget)
    rng = np.random.default_rng(0 if rng is None else rng)

    top = max(_support_top(targets), _support_top(avoid))
    if eps >= 2.0 * K:
        # degenerate tolerance: |<T^n x, y>| <= K <= eps/2 for any unit x,
        # so the first basis atom past the constraints already works
        meter.charge(1)
        x = WindowVector.basis(top + 1)
        schedule = FlatSchedule(
            eps=eps, power_bound=K, counts=(1,), thresholds=(Fraction(eps),), times=(1,)
        )
        return x, _verify_flat(op, x, eps, targets, schedule, rng)

    eps_fr = Fraction(eps)
    s = _stage_count(eps_fr, K)
    meter.charge(s)
    positions = sidon_set(s) + (top + 1)
    x = _sidon_mix(positions)
    schedule = FlatSchedule(
        eps=eps,
        power_bound=K,
        counts=(s,),
        thresholds=(eps_fr,),
        times=(int(positions[-1] - positions[0]) + 1,),
    )
    schedule.validate()
    for v in avoid:
        if abs(inner(x, v)) != 0.0:
            raise NumericalError("flat vector failed exact avoidance")
    return x, _verify_flat(op, x, eps, targets, schedule, rng)


# full difference scans are cubic in the atom count; past this they sample
_FULL_SCAN_ATOMS = 256
_SAMPLE_DIFFS = 2048


def _difference_candidates(pos, rng):
    s = len(pos)
    if s <= _FULL_SCAN_ATOMS:
        d = (pos[None, :] - pos[:, None]).ravel()
        return np.unique(d[d >= 1]), "full"
    lo = rng.integers(0, s, _SAMPLE_DIFFS)
    hi = rng.integers(0, s, _SAMPLE_DIFFS)
    d = np.abs(pos[hi] - pos[lo])
    return np.unique(d[d >= 1]), "sampled"


def _verify_flat(op, x, eps, targets, schedule, rng):
    """Measure the three suprema over the exact (or sampled) horizon."""
    lo, hi = x.support_range()
    span = hi - lo
    s = len(x.indices)
    closed_form = 1.0 / s if s > 1 else 0.0

    diffs, scan = _difference_candidates(x.indices, rng)
    sup_diag, arg_diag = 0.0, 0
    for n in diffs.tolist():
        v = abs(_form(op, x, n))
        if v > sup_diag:
            sup_diag, arg_diag = v, n
    if s == 1:
        sup_diag = abs(_form(op, x, 1))
        arg_diag = 1
    zero_probe = abs(_form(op, x, span + 1))
    if zero_probe != 0.0:
        raise NumericalError("support span horizon is not exact", residual=zero_probe)

    per_target = []
    for a in targets:
        # forward terms: T^n x lives above x, and a sits below all of x by
        # placement; probe the first and the boundary power to witness it
        fwd = max(abs(_form(op, x, n, against=a)) for n in (1, span + 1))
        # adjoint terms via <T^{*n} x, a> = conj(<T^n a, x>); candidates are
        # the positive gaps between x atoms and a's support
        cand = np.unique(
            x.indices[None, :] - np.asarray(a.indices)[:, None]
        ).ravel()
        cand = cand[cand >= 1]
        if len(cand) > 4 * _SAMPLE_DIFFS:
            cand = np.sort(rng.choice(cand, 4 * _SAMPLE_DIFFS, replace=False))
        adj, arg_adj = 0.0, 0
        for n in cand.tolist():
            v = abs(_form(op, a, n, against=x))
            if v > adj:
                adj, arg_adj = v, n
        per_target.append(
            {
                "sup_forward": fwd,
                "sup_adjoint": adj,
                "arg_adjoint": int(arg_adj),
                "candidates": int(len(cand)),
            }
        )

    worst = max(
        [sup_diag, closed_form]
        + [t["sup_forward"] for t in per_target]
        + [t["sup_adjoint"] for t in per_target]
    )
    report = {
        "schedule": schedule.to_json(),
        "scan": scan,
        "sup_form": sup_diag,
        "arg_form": int(arg_diag),
        "sup_form_closed": closed_form,
        "exact_zero_beyond": span + 1,
        "targets": per_target,
        "eps": eps,
        "passed": bool(worst <= eps),
    }
    if not report["passed"]:
        raise NumericalError(
            "flat vector failed its measured supremum check", residual=worst
        )
    return report


# -- flat subspaces ---------------------------------------------------------------


def _compression_matrix(op, vectors, n):
    d = len(vectors)
    images = [apply_power(op, v, n) for v in vectors]
    c = np.empty((d, d), np.complex128)
    for i in range(d):
        for j in range(d):
            c[i, j] = inner(images[j], vectors[i])
    return c


def flat_subspace(op, eps, d, window_budget=None, rng=None):
    """Orthonormal y_1..y_d compressing every positive power below eps.

    Stage r gets s_r atoms at the threshold eps / (2^{r+3} (r+1)), all drawn
    from one Sidon pool, chunks stacked upward with gaps covering the
    accumulated time horizon.  The report certifies the supremum in closed
    form (lower-triangular entries bounded by 1/sqrt(s_i s_j), one aligned
    pair each) and rechecks sampled powers honestly from the raw vectors.
    """
    eps = float(eps)
    if eps <= 0:
        raise DegenerateInputError("eps must be positive")
    d = int(d)
    if d < 1:
        raise DegenerateInputError("need at least one subspace dimension")
    K = _flat_power_bound(op)
    rng = np.random.default_rng(0 if rng is None else rng)
    meter = BudgetMeter(window_budget)

    thresholds = _stage_thresholds(eps, d)
    counts = tuple(_stage_count(t, K) for t in thresholds)
    meter.charge(sum(counts))
    pool = sidon_set(sum(counts))

    vectors = []
    times = []
    offset = 1
    start = 0
    for s_r in counts:
        chunk = pool[start : start + s_r]
        positions = chunk + (offset - int(chunk[0]))
        vectors.append(_sidon_mix(positions))
        start += s_r
        horizon = int(positions[-1]) - int(vectors[0].indices[0]) + 1
        times.append(horizon)
        # next chunk sits beyond every T^n / T^{*n} image, n < horizon
        offset = int(positions[-1]) + horizon + 1
    schedule = FlatSchedule(
        eps=eps, power_bound=K, counts=counts, thresholds=thresholds, times=tuple(times)
    )
    schedule.validate()

    # closed-form certificate: at any n >= 1 the compression matrix is lower
    # triangular with |C[i][j]| <= 1 / sqrt(s_i s_j), each difference realized
    # by at most one atom pair of the shared Sidon pool
    bound_matrix = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1):
            bound_matrix[i, j] = 1.0 / math.sqrt(counts[i] * counts[j])
    sup_bound = float(np.linalg.norm(bound_matrix, 2))
    stage_bounds = []
    for r in range(d):
        live = bound_matrix.copy()
        live[: r + 1, : r + 1] = 0.0  # stages <= r are dead past times[r]
        stage_bounds.append(float(np.linalg.norm(live, 2)))

    gram = np.array([[inner(b, a) for b in vectors] for a in vectors])
    gram_defect = float(np.max(np.abs(gram - np.eye(d))))

    # honest samples: one realized difference per stage pair, plus a random
    # power and the beyond-horizon zero
    samples = set()
    for i in range(d):
        vi = vectors[i].indices
        for j in range(i + 1):
            vj = vectors[j].indices
            gap = int(vi[rng.integers(len(vi))]) - int(vj[rng.integers(len(vj))])
            if gap >= 1:
                samples.add(gap)
    total_span = int(vectors[-1].indices[-1]) - int(vectors[0].indices[0])
    samples.add(int(rng.integers(1, total_span + 1)))
    samples.add(total_span + 1)

    per_n = []
    for n in sorted(samples):
        c = _compression_matrix(op, vectors, n)
        norm = float(np.linalg.norm(c, 2))
        w, _theta = numerical_radius(c)
        dead = sum(1 for t in times if t <= n)
        stage_bound = stage_bounds[dead - 1] if dead else sup_bound
        entry = {
            "n": n,
            "norm": norm,
            "numerical_radius": w,
            "norm_le_2w": bool(norm <= 2.0 * w + 1e-12),
            "stage_bound": stage_bound,
            "beyond_horizon": n > total_span,
        }
        per_n.append(entry)
        if n > total_span and norm != 0.0:
            raise NumericalError("compression should vanish beyond the span")
        if norm > stage_bound + 1e-12 or not entry["norm_le_2w"]:
            raise NumericalError(
                "sampled compression violates its certificate", residual=norm
            )

    report = {
        "schedule": schedule.to_json(),
        "gram_defect": gram_defect,
        "sup_bound_closed_form": sup_bound,
        "stage_bounds": stage_bounds,
        "stage_bounds_target": [float(Fraction(eps) / 2 ** (r + 1)) for r in range(d)],
        "per_n": per_n,
        "total_span": total_span,
        "eps": eps,
        "passed": bool(
            gram_defect <= 1e-10
            and sup_bound <= eps
            and all(
                sb <= float(Fraction(eps) / 2 ** (r + 1)) + 1e-15
                for r, sb in enumerate(stage_bounds)
            )
        ),
    }
    if not report["passed"]:
        raise NumericalError("flat subspace failed its certificate")
    return Subspace(tuple(vectors)), report


def flat_report_csv(report):
    """CSV rows (n, norm, numerical_radius, stage_bound) from a subspace report."""
    lines = ["n,norm,numerical_radius,stage_bound"]
    for row in report["per_n"]:
        lines.append(
            f"{row['n']},{row['norm']:.12g},{row['numerical_radius']:.12g},"
            f"{row['stage_bound']:.12g}"
        )
    return "\n".join(lines) + "\n"


# -- spectral preconditions --------------------------------------------------------


def spectral_precondition(op):
    """(holds, reason): 0 in hull sigma_e, or the unit circle inside sigma."""
    if isinstance(op, DenseOperator):
        return False, "essential notions undefined at finite dimension"
    try:
        info = spectral_descriptor(op)
    except UnsupportedModelError as exc:
        return False, str(exc)
    if hull_contains_zero(info.sigma_e):
        return True, "0 lies in the polynomial hull of the essential spectrum"
    if info.sigma.contains_circle(1.0):
        return True, "the unit circle lies in the spectrum"
    return False, "neither 0 in hull sigma_e nor the unit circle in sigma"
