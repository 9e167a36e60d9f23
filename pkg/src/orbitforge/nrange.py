"""Numerical range boundaries and membership witnesses.

Dense matrices get their numerical range boundary and numerical radius from
the support-function identity

    h(theta) = top eigenvalue of Re(e^{-i theta} T),

evaluated with a Hermitian eigensolver on an angle grid, with golden-section
polish for the radius.

For the lazy models the interesting question is the reverse one: given
targets mu_1..mu_N for the quadratic forms <T^{p_1} x, x>, ..., <T^{p_N} x, x>,
produce a unit vector that attains them within delta, orthogonal to any given
finite family.  :func:`we_membership_witness` does this by building an atomic
measure with the right power moments (:mod:`orbitforge.moments`) and then
realizing each atom as an approximate eigenvector: disjoint shift windows or
phase-targeted diagonal basis vectors.  Disjointness makes every cross term
vanish identically, so the final defects are measured from the raw vector and
compared against delta, never inferred.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    NumericalError,
    PreconditionError,
    UnsupportedModelError,
)
from .moments import (
    AtomicMeasure,
    admissible_radius,
    circle_moment_match,
    power_profile_measure,
)
from .operators import (
    BilateralShift,
    ConstantWeights,
    DenseOperator,
    DiagonalUnitary,
    MultiplicationGrid,
    OperatorPower,
    QuadraticIrrationalRotation,
    Subspace,
    UnilateralShift,
    apply_power,
    as_power,
    compress,
)
from .spectra import circle_in_pi_essential, shift_eigen_window
from .vectors import BudgetMeter, WindowVector, inner, normalize

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# dense numerical range


def _as_dense_matrix(op):
    if isinstance(op, DenseOperator):
        return np.array(op.matrix, np.complex128)
    try:
        arr = np.asarray(op, np.complex128)
    except (TypeError, ValueError):
        arr = None
    if arr is not None and arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr
    raise UnsupportedModelError("numerical range boundary needs a dense square matrix")


@dataclass
class BoundaryResult:
    thetas: np.ndarray
    support: np.ndarray
    points: np.ndarray

    def boundary_radius(self):
        return float(np.max(np.abs(self.points)))

    def rows(self):
        return [
            (float(t), float(p.real), float(p.imag))
            for t, p in zip(self.thetas, self.points)
        ]


def nr_boundary(op, n_angles=512):
    """Boundary points of the numerical range of a dense matrix.

    For each grid angle theta, the top eigenvector x of Re(e^{-i theta} T)
    yields the boundary point <T x, x> whose outward normal is e^{i theta}.
    """
    a = _as_dense_matrix(op)
    n_angles = int(n_angles)
    if n_angles < 3:
        raise DegenerateInputError("need at least three angles")
    thetas = TWO_PI * np.arange(n_angles) / n_angles
    support = np.empty(n_angles)
    points = np.empty(n_angles, np.complex128)
    for i, t in enumerate(thetas):
        h = (np.exp(-1j * t) * a + np.exp(1j * t) * a.conj().T) / 2.0
        vals, vecs = np.linalg.eigh(h)
        x = vecs[:, -1]
        support[i] = vals[-1]
        points[i] = np.vdot(x, a @ x)
    return BoundaryResult(thetas=thetas, support=support, points=points)


def _support_value(a, theta):
    h = (np.exp(-1j * theta) * a + np.exp(1j * theta) * a.conj().T) / 2.0
    return float(np.linalg.eigvalsh(h)[-1])


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo, hi, iters=80):
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _GOLDEN * (hi - lo)
            f1 = f(x1)
    return (lo + hi) / 2.0


def numerical_radius(op, n_angles=720):
    """max_theta h(theta) with golden-section polish around the grid peaks."""
    a = _as_dense_matrix(op)
    n_angles = int(n_angles)
    thetas = TWO_PI * np.arange(n_angles) / n_angles
    values = np.array([_support_value(a, t) for t in thetas])
    step = TWO_PI / n_angles
    best_w = -np.inf
    best_t = 0.0
    # polish the three best grid peaks; h can have several near-equal lobes
    for idx in np.argsort(values)[-3:]:
        t0 = thetas[idx]
        t_star = _golden_max(lambda t: _support_value(a, t), t0 - step, t0 + step)
        w = _support_value(a, t_star)
        if w > best_w:
            best_w, best_t = w, t_star
    return best_w, best_t % TWO_PI


def radius_norm_bounds(op, n_angles=720):
    """Measured two-sided comparison w(T) <= ||T|| <= 2 w(T) for dense T."""
    a = _as_dense_matrix(op)
    w, _ = numerical_radius(op, n_angles)
    # spectral norm via the certified power-iteration bound of DenseOperator
    norm = DenseOperator(a).norm_bound()
    lower_slack = norm - w
    upper_slack = 2.0 * w - norm
    return {
        "radius": w,
        "norm_bound": norm,
        "lower_holds": w <= norm + 1e-9,
        "upper_holds": norm <= 2.0 * w + 1e-6 * max(norm, 1.0),
        "lower_slack": lower_slack,
        "upper_slack": upper_slack,
    }


# ---------------------------------------------------------------------------
# membership witnesses


@dataclass
class WitnessResult:
    vector: WindowVector
    powers: tuple
    targets: np.ndarray
    measured: np.ndarray
    defects: np.ndarray
    delta: float
    route: str
    realization: str
    params: dict = field(default_factory=dict)

    def max_defect(self):
        return float(np.max(self.defects)) if len(self.defects) else 0.0


def _same_generator(a, b):
    if a is b:
        return True
    if type(a) is not type(b):
        return False
    if isinstance(a, (BilateralShift, UnilateralShift)):
        return a.weights is None and b.weights is None
    if isinstance(a, DiagonalUnitary):
        return a.phase_rule is b.phase_rule and a.index_set == b.index_set
    return False


def _resolve_power_tuple(ops, n_targets):
    if not isinstance(ops, (tuple, list)):
        base, p = as_power(ops)
        if p != 1:
            return base, tuple(p * (j + 1) for j in range(n_targets))
        return base, tuple(range(1, n_targets + 1))
    if len(ops) != n_targets:
        raise DegenerateInputError(
            f"{len(ops)} operators for {n_targets} targets"
        )
    pairs = [as_power(op) for op in ops]
    base = pairs[0][0]
    for b, _ in pairs[1:]:
        if not _same_generator(base, b):
            raise UnsupportedModelError(
                "tuple entries must all be powers of one generator"
            )
    powers = tuple(p for _, p in pairs)
    if len(set(powers)) != len(powers):
        raise DegenerateInputError("duplicate powers in the operator tuple")
    return base, powers


def _witness_circle_radius(base):
    """Radius of the essential circle the witness construction lives on."""
    if isinstance(base, (BilateralShift, UnilateralShift)):
        if base.weights is None:
            return 1.0
        if isinstance(base.weights, ConstantWeights):
            return abs(base.weights.value)
        raise UnsupportedModelError(
            "witness construction needs a constant-modulus shift weight"
        )
    if isinstance(base, DiagonalUnitary):
        if isinstance(base.phase_rule, QuadraticIrrationalRotation):
            return 1.0
        raise UnsupportedModelError(
            "witness construction needs a dense phase orbit on the diagonal"
        )
    if isinstance(base, (DenseOperator, MultiplicationGrid)):
        # finite-rank models have empty essential spectra; let the spectral
        # precondition below refuse with the mathematically honest reason
        return 1.0
    raise UnsupportedModelError(
        f"no witness realization for {type(base).__name__}"
    )


def _detect_power_profile(powers, mu):
    """lam with mu_k = lam^{p_k} for all k, if one exists."""
    if 1 in powers:
        lam = complex(mu[powers.index(1)])
    else:
        return None
    for p, m in zip(powers, mu):
        if abs(complex(m) - lam ** p) > 1e-12 * (1.0 + abs(lam)) ** p:
            return None
    return lam


def _constraint_support(constraints):
    out = []
    for c in constraints or ():
        if isinstance(c, Subspace):
            out.extend(c.basis)
        else:
            out.append(c)
    return out


def _realize_on_shift(base, measure, powers, delta, constraints, meter):
    p_max = max(powers)
    rho = float(measure.rho)
    # window edge effects contribute (p/m) rho^p per power, so this length
    # keeps the realization error under delta/2 before the final re-measure
    m = max(2 * p_max + 2, math.ceil(2.0 * p_max * max(rho, 1.0) ** p_max / delta))
    start = 0
    for c in constraints:
        if len(c.indices):
            start = max(start, int(c.indices[-1]) + 1)
    start += p_max + 1
    meter.charge(len(measure.weights) * m)
    x = WindowVector.zero()
    for z, w in zip(measure.positions, measure.weights):
        window = shift_eigen_window(base, z, m, start=start)
        x = x + math.sqrt(w) * window
        start += m + p_max + 1
    return normalize(x), {"window_length": m, "atom_count": len(measure.weights)}


def _realize_on_diagonal(base, measure, powers, delta, constraints, meter):
    p_max = max(powers)
    used = set()
    for c in constraints:
        used.update(int(i) for i in c.indices)
    tol_turn = delta / (4.0 * p_max * TWO_PI)
    rule = base.phase_rule
    meter.charge(len(measure.weights))
    entries = []
    for z, w in zip(measure.positions, measure.weights):
        turn = (math.atan2(z.imag, z.real) / TWO_PI) % 1.0
        k = rule.find_index(turn, tol_turn, exclude=used)
        used.add(k)
        entries.append((k, math.sqrt(w)))
    x = WindowVector.from_pairs(entries)
    return normalize(x), {
        "atom_count": len(measure.weights),
        "phase_tolerance_turns": tol_turn,
    }


def we_membership_witness(
    ops, mu, delta, constraints=None, window_budget=None, meter=None
):
    """Unit vector x with <T^{p_k} x, x> within delta of mu_k, x orthogonal
    to all constraint vectors and to their images under the tuple powers.

    ops is either one generator (powers default to 1..len(mu)) or a tuple of
    powers of a single generator.  Two routes build the intermediate measure:
    moment gadgets for targets inside the admissible radius, the discretized
    harmonic measure when mu follows a power profile lam^{p_k} with lam
    strictly inside the circle (on-circle profiles use a single eigen window).
    Everything is re-measured from the returned vector; a defect above delta
    raises instead of returning.
    """
    mu = np.asarray(list(mu), np.complex128)
    if len(mu) == 0:
        raise DegenerateInputError("need at least one target")
    delta = float(delta)
    if delta <= 0:
        raise DegenerateInputError("delta must be positive")
    base, powers = _resolve_power_tuple(ops, len(mu))
    rho = _witness_circle_radius(base)
    ok, route_spec = circle_in_pi_essential(base, rho)
    if not ok:
        raise PreconditionError(
            f"the circle of radius {rho:g} is not in the essential approximate "
            f"point spectrum of this {type(base).__name__}"
        )
    constraints = _constraint_support(constraints)
    meter = meter if meter is not None else BudgetMeter(window_budget)
    p_max = max(powers)

    lam = _detect_power_profile(powers, mu)
    if lam is not None and abs(abs(lam) - rho) <= 1e-12:
        measure = AtomicMeasure(rho, np.array([lam]), np.array([1.0]))
        route = "eigen_window"
    elif lam is not None and abs(lam) < rho - 1e-12:
        res = power_profile_measure(lam, p_max, rho, tol=delta / (4.0 * p_max))
        measure = res.measure
        route = "poisson"
    else:
        r = admissible_radius(rho, p_max)
        full = np.zeros(p_max, np.complex128)
        for p, m in zip(powers, mu):
            full[p - 1] = m
        if np.any(np.abs(full) > r * (1 + 1e-12) + 1e-15):
            raise DomainError(
                "targets are neither inside the admissible radius "
                f"r = {r:.6g} nor a strictly interior power profile",
                admissible_radius=r,
            )
        res = circle_moment_match(full, rho=rho)
        measure = res.measure
        route = "moment_gadgets"

    if isinstance(base, (BilateralShift, UnilateralShift)):
        x, params = _realize_on_shift(base, measure, powers, delta, constraints, meter)
        realization = "shift_windows"
    else:
        x, params = _realize_on_diagonal(base, measure, powers, delta, constraints, meter)
        realization = "diagonal_indices"

    measured = np.array([inner(apply_power(base, x, p), x) for p in powers])
    defects = np.abs(measured - mu)
    if np.max(defects) > delta:
        raise NumericalError(
            f"witness defect {np.max(defects):.3e} exceeds delta {delta:g}",
            residual=float(np.max(defects)),
        )
    for c in constraints:
        if abs(inner(x, c)) > 1e-12:
            raise NumericalError("witness failed a constraint orthogonality")
    params["entries_charged"] = meter.used
    params["spectral_route"] = route_spec
    return WitnessResult(
        vector=x,
        powers=powers,
        targets=mu,
        measured=measured,
        defects=defects,
        delta=delta,
        route=route,
        realization=realization,
        params=params,
    )


# ---------------------------------------------------------------------------
# lambda-power compressions


@dataclass
class CompressionResult:
    subspace: Subspace
    lam: complex
    n_powers: int
    power_defects: np.ndarray
    gram_defect: float
    delta: float

    def passed(self):
        return bool(np.all(self.power_defects <= self.delta)) and self.gram_defect <= 1e-10


def diagonal_compression_subspace(op, lam, n, dim=2, delta=1e-3, window_budget=None):
    """Subspace L where every compression P_L T^p P_L looks like lam^p I.

    Witness vectors are built one at a time, each orthogonal to its
    predecessors and to their power images, so the off-diagonal entries of
    each compression vanish by support disjointness and the diagonals carry
    the moment defects.  The returned certificate re-measures both.
    """
    n = int(n)
    dim = int(dim)
    if dim < 1 or n < 1:
        raise DegenerateInputError("need dim >= 1 and n >= 1")
    lam = complex(lam)
    mu = [lam ** p for p in range(1, n + 1)]
    vectors = []
    for _ in range(dim):
        res = we_membership_witness(
            op, mu, delta, constraints=vectors, window_budget=window_budget
        )
        vectors.append(res.vector)
    sub = Subspace(vectors)
    gram = np.array([[inner(u, v) for v in vectors] for u in vectors])
    gram_defect = float(np.max(np.abs(gram - np.eye(dim))))
    defects = []
    for p in range(1, n + 1):
        comp = compress(OperatorPower(op, p), sub)
        defects.append(float(np.max(np.abs(comp - lam ** p * np.eye(dim)))))
    defects = np.array(defects)
    if np.max(defects) > delta:
        raise NumericalError(
            f"compression defect {np.max(defects):.3e} exceeds delta {delta:g}",
            residual=float(np.max(defects)),
        )
    return CompressionResult(
        subspace=sub,
        lam=lam,
        n_powers=n,
        power_defects=defects,
        gram_defect=gram_defect,
        delta=delta,
    )
