"""Orbit-geometry constructions with recomputed certificates.

Four constructions live here, all on the catalogued infinite models:

* :func:`zero_tuple_vector` drives every quadratic form <T^p x, x> of a power
  tuple to zero by a staged iteration.  Each stage adds an increment from
  :func:`orbitforge.nrange.we_membership_witness` that is exactly orthogonal
  to the iterate and its power images, so the stage norms follow the closed
  form 1 - 2^{-k} and the forms shrink geometrically.
* :func:`almost_orthogonal_orbit` builds a unit vector whose orbit
  x, Tx, ..., T^{n-1}x is almost orthonormal with a small recurrence defect
  ||T^n x - x||, from a DFT mix of n approximate eigenvectors at the n-th
  roots of unity.
* :func:`rokhlin_tower` produces orthonormal w_0..w_{n-1} with T w_j close to
  w_{j+1} cyclically and with prescribed mean n^{-1/2} sum w_j = u, the
  operator analogue of a Rokhlin tower in ergodic theory.
* :func:`rotation_tower` is the multiplication-model variant on a circle
  grid: exact zero sum instead of a prescribed mean, links bounded by 2 pi/n.

Every certificate quantity is recomputed from the raw output vectors;
construction intermediates are never trusted.  Finite-codimension constraints
are passed as the finite family spanning the forbidden complement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    NumericalError,
    PreconditionError,
    ResolutionError,
    UnsupportedModelError,
    WindowBudgetError,
)
from .moments import admissible_radius
from .nrange import _resolve_power_tuple, _witness_circle_radius, we_membership_witness
from .operators import (
    BilateralShift,
    DiagonalUnitary,
    MultiplicationGrid,
    UnilateralShift,
    apply_power,
)
from .spectra import approx_eigenvector_family, circle_in_pi_essential
from .vectors import BudgetMeter, WindowVector, add_scaled, inner, normalize

TWO_PI = 2.0 * math.pi

# measured orthogonality at or below this is reported as exact
HARD_TOL = 1e-8


def _check(measured, bound, strict=False):
    measured = float(measured)
    bound = float(bound)
    passed = measured < bound if strict else measured <= bound
    return {"measured": measured, "bound": bound, "strict": strict, "passed": bool(passed)}


def _complex_list(arr):
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr).ravel()]


@dataclass
class OrbitCertificate:
    """Recomputed orbit data for a unit vector under one generator.

    gram[a, b] = <T^a x, T^b x> for a, b < n; norms holds ||T^j x|| for
    j = 0..n; recurrence is ||T^n x - x||.  checks maps inequality names to
    {measured, bound, strict, passed} entries, all recomputed from x.
    """

    x: WindowVector
    n: int
    eps: float
    gram: np.ndarray
    norms: np.ndarray
    recurrence: float
    checks: dict
    params: dict = field(default_factory=dict)

    def passed(self):
        return all(c["passed"] for c in self.checks.values())

    def worst_slack(self):
        return min(
            (c["bound"] - c["measured"] for c in self.checks.values()),
            default=0.0,
        )

    def to_json(self):
        from .vectors import vector_to_json

        return {
            "n": self.n,
            "eps": self.eps,
            "gram": [_complex_list(row) for row in self.gram],
            "norms": [float(v) for v in self.norms],
            "recurrence": self.recurrence,
            "checks": self.checks,
            "params": self.params,
            "x": vector_to_json(self.x, kind="orbit_vector"),
        }


@dataclass
class Tower:
    """Tower of unit vectors with measured link residuals.

    ``u`` is the prescribed mean when one exists (eigen-window towers);
    ``sum_defect`` replaces it for the zero-sum rotation variant.
    ``gram_defect`` is max |Gram(w) - I|, informational for the rotation
    variant where the w_j are genuinely non-orthogonal.
    """

    w: list
    u: WindowVector | None
    eps: float
    link_residuals: np.ndarray
    gram_defect: float
    mean_defect: float | None
    sum_defect: float | None
    checks: dict
    params: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.w)

    def passed(self):
        return all(c["passed"] for c in self.checks.values())

    def to_json(self):
        from .vectors import vector_to_json

        return {
            "n": self.n,
            "eps": self.eps,
            "link_residuals": [float(r) for r in self.link_residuals],
            "gram_defect": self.gram_defect,
            "mean_defect": self.mean_defect,
            "sum_defect": self.sum_defect,
            "checks": self.checks,
            "params": self.params,
            "u": None if self.u is None else vector_to_json(self.u, kind="tower_mean"),
            "w": [vector_to_json(v, kind="tower_level") for v in self.w],
        }


def _orbit_data(base, x, n):
    orbit = [x]
    cur = x
    for _ in range(n):
        cur = base.apply(cur)
        orbit.append(cur)
    gram = np.empty((n, n), np.complex128)
    for a in range(n):
        for b in range(n):
            gram[a, b] = inner(orbit[a], orbit[b])
    norms = np.array([v.norm() for v in orbit])
    recurrence = (orbit[n] - x).norm()
    return gram, norms, recurrence


def _orbit_checks(gram, norms, recurrence, n, eps):
    if n >= 2:
        ortho = float(np.max(np.abs(gram[1:, 0])))
        off = float(np.max(np.abs(gram - np.diag(np.diag(gram)))))
        norm_dev = float(np.max(np.abs(norms[1:n] - 1.0)))
    else:
        ortho = off = norm_dev = 0.0
    return {
        "orthogonality": _check(ortho, HARD_TOL),
        "off_diagonal": _check(off, eps, strict=True),
        "norm_window": _check(norm_dev, eps, strict=True),
        "recurrence": _check(recurrence, eps, strict=True),
    }


# ---------------------------------------------------------------------------
# form zeroing


def _measure_forms(base, powers, x):
    return np.array([inner(apply_power(base, x, p), x) for p in powers])


def zero_iteration_step(
    ops, x, stage, radius=None, avoid=None, window_budget=None, meter=None
):
    """One zeroing stage: x' = x + 2^{-(stage+1)/2} u.

    The increment u is a unit witness with <T^p u, u> = -2^{stage+1} <T^p x, x>
    within radius/2, orthogonal to x, its power images, and anything in
    ``avoid``.  Entering norm must be sqrt(1 - 2^{-stage}); the update then
    gives ||x'||^2 = 1 - 2^{-stage-1} and ||x' - x||^2 = 2^{-stage-1} exactly.
    """
    stage = int(stage)
    if stage < 0:
        raise DegenerateInputError("stage must be nonnegative")
    base, powers = _resolve_power_tuple(ops, _tuple_len(ops))
    if radius is None:
        radius = admissible_radius(_witness_circle_radius(base), max(powers))
    radius = float(radius)
    norm_sq = x.norm() ** 2
    if abs(norm_sq - (1.0 - 2.0 ** (-stage))) > 1e-10:
        raise PreconditionError(
            f"stage {stage} expects ||x||^2 = 1 - 2^-{stage}, got {norm_sq:.12f}"
        )
    mu = _measure_forms(base, powers, x)
    cap = radius * 2.0 ** (-stage - 1) * (1.0 + 1e-12)
    if np.any(np.abs(mu) > cap):
        raise PreconditionError(
            f"stage {stage} expects |<T^p x, x>| <= {cap:.3e}, "
            f"got {np.max(np.abs(mu)):.3e}"
        )
    targets = -(2.0 ** (stage + 1)) * mu
    constraints = list(avoid or ())
    if len(x.indices):
        constraints = constraints + [x]
    wit = we_membership_witness(
        ops,
        targets,
        radius / 2.0,
        constraints=constraints,
        window_budget=window_budget,
        meter=meter,
    )
    return add_scaled(x, wit.vector, 1.0, 2.0 ** (-(stage + 1) / 2.0))


def _tuple_len(ops):
    return len(ops) if isinstance(ops, (tuple, list)) else 1


def zero_tuple_vector(
    ops,
    avoid=None,
    start=None,
    start_stage=0,
    tol=HARD_TOL,
    max_stages=60,
    window_budget=None,
):
    """Unit w with every |<T^p w, w>| <= tol, built by staged increments.

    ``start`` defaults to the zero vector at stage 0; a unit start whose
    forms already meet tol is returned as-is.  A non-unit start must sit on
    the stage ladder: ||start||^2 = 1 - 2^{-start_stage}.  ``avoid`` lists
    vectors spanning the forbidden complement; w and its power images stay
    orthogonal to them.  The certificate records stage norms against the
    closed form, the final forms, and the distance ||w - start|| against the
    tail bound 3 * 2^{-start_stage/2 - 1}.
    """
    base, powers = _resolve_power_tuple(ops, _tuple_len(ops))
    tol = float(tol)
    if tol <= 0:
        raise DegenerateInputError("tol must be positive")
    start_stage = int(start_stage)
    if start_stage < 0:
        raise DegenerateInputError("start_stage must be nonnegative")
    rho = _witness_circle_radius(base)
    ok, _route = circle_in_pi_essential(base, rho)
    if not ok:
        raise PreconditionError(
            "the spectral circle needed by the zeroing witness is missing"
        )
    radius = admissible_radius(rho, max(powers))
    meter = BudgetMeter(window_budget)
    avoid = list(avoid or ())

    x_start = start if start is not None else WindowVector.zero()
    x = x_start
    stages = []
    early_exit = False

    start_norm = x.norm()
    if start is not None and abs(start_norm - 1.0) <= 1e-9:
        forms = _measure_forms(base, powers, x)
        if np.all(np.abs(forms) <= tol):
            early_exit = True
            w = normalize(x)
        else:
            raise PreconditionError(
                "unit start vector does not satisfy the requested tolerance; "
                "restart from the stage ladder instead"
            )
    if not early_exit:
        k = start_stage
        while True:
            norm_sq = x.norm() ** 2
            if norm_sq > 0:
                forms = _measure_forms(base, powers, x)
                if np.max(np.abs(forms)) / norm_sq <= tol * 0.999:
                    break
            if k >= start_stage + max_stages:
                raise NumericalError(
                    f"zeroing did not converge within {max_stages} stages",
                    residual=float(np.max(np.abs(forms)) / norm_sq) if norm_sq else None,
                )
            x = zero_iteration_step(
                ops, x, k, radius=radius, avoid=avoid, meter=meter
            )
            stages.append(
                {
                    "stage": k,
                    "norm_sq": x.norm() ** 2,
                    "expected_norm_sq": 1.0 - 2.0 ** (-k - 1),
                }
            )
            k += 1
        w = normalize(x)

    n_max = max(powers)
    gram, norms, recurrence = _orbit_data(base, w, n_max)
    final_forms = _measure_forms(base, powers, w)
    stage_dev = max(
        (abs(s["norm_sq"] - s["expected_norm_sq"]) for s in stages), default=0.0
    )
    distance = (w - x_start).norm()
    dist_bound = 3.0 * 2.0 ** (-start_stage / 2.0 - 1.0)
    checks = {
        "forms": _check(float(np.max(np.abs(final_forms))), tol),
        "stage_norms": _check(stage_dev, 1e-10),
        "distance": _check(distance, dist_bound),
        "unit_norm": _check(abs(w.norm() - 1.0), 1e-12),
    }
    cert = OrbitCertificate(
        x=w,
        n=n_max,
        eps=tol,
        gram=gram,
        norms=norms,
        recurrence=recurrence,
        checks=checks,
        params={
            "powers": list(powers),
            "admissible_radius": radius,
            "start_stage": start_stage,
            "stages": stages,
            "early_exit": early_exit,
            "final_forms": _complex_list(final_forms),
            "entries_charged": meter.used,
        },
    )
    if not cert.passed():
        raise NumericalError(
            "zeroing certificate failed its own recheck",
            residual=float(np.max(np.abs(final_forms))),
        )
    return cert


# ---------------------------------------------------------------------------
# almost orthogonal orbits


def _unit_roots(n):
    return np.exp(2j * math.pi * np.arange(n) / n)


def almost_orthogonal_orbit(base, n, eps, window_budget=None):
    """Unit x whose orbit under T is almost orthonormal and almost periodic.

    Mixes n approximate eigenvectors at the n-th roots of unity,
    v = n^{-1/2} sum u_k.  Disjoint realizations make the cross terms exact
    zeros, so the discrete Fourier cancellation kills every off-diagonal
    Gram entry and the only eps-sized quantity left is the recurrence
    ||T^n x - x||, controlled by the window length.  If the measured forms
    ever exceed the exactness threshold, a zeroing pass cleans them up; on
    the catalogued models this is never needed and the certificate records
    that.
    """
    n = int(n)
    if n < 1:
        raise DegenerateInputError("orbit length must be at least 1")
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise DegenerateInputError("eps must lie in (0, 1)")
    ok, route = circle_in_pi_essential(base, 1.0)
    if not ok:
        raise PreconditionError(
            "the unit circle is not in the essential approximate point "
            f"spectrum of this {type(base).__name__}"
        )
    nb = base.norm_bound()
    eps_prime = eps / (4.0 * n ** 1.5 * nb ** (2 * n))
    meter = BudgetMeter(window_budget)

    if isinstance(base, DiagonalUnitary):
        # basis realizations are single atoms; the residual scale is set by
        # the index tolerance, so meet both the proof bound and the hard
        # orthogonality threshold directly
        eps_vec = min(eps_prime, 0.5 * HARD_TOL / n)
        m = math.ceil(2.0 / eps_vec ** 2)
        m_proof = m
        budget_limited = False
    else:
        m_proof = math.ceil(2.0 / eps_prime ** 2)
        m_target = max(math.ceil(8.0 * n / eps ** 2), 2 * n + 2)
        # the certificate stores the family plus n+1 orbit vectors of the
        # same support, so the affordable window splits the budget n(n+2) ways
        affordable = meter.limit // (n * (n + 2))
        m = min(m_proof, m_target)
        budget_limited = m > affordable
        if budget_limited:
            m = affordable
        if m < 2 * n + 2:
            raise WindowBudgetError(
                f"orbit of length {n} needs at least {(2 * n + 2) * n * (n + 2)} "
                f"stored entries, budget is {meter.limit}",
                required=(2 * n + 2) * n * (n + 2),
                budget=meter.limit,
            )

    lambdas = _unit_roots(n)
    family = approx_eigenvector_family(base, lambdas, m, margin=n + 1, meter=meter)
    scale = 1.0 / math.sqrt(n)
    v = WindowVector.zero()
    for pair in family:
        v = add_scaled(v, pair.vector, 1.0, scale)
    x = normalize(v)

    c_min = 0
    while 32.0 * 2.0 ** (-c_min / 2.0) * nb ** n >= eps:
        c_min += 1
    correction_applied = False
    if n >= 2:
        forms = _measure_forms(base, range(1, n), x)
        if np.max(np.abs(forms)) > HARD_TOL:
            radius = admissible_radius(1.0, n - 1)
            max_form = float(np.max(np.abs(forms)))
            c = c_min
            while (1.0 - 2.0 ** (-c)) * max_form > radius * 2.0 ** (-c - 1):
                c += 1
                if c > c_min + 120:
                    raise NumericalError(
                        "mixed orbit vector is too far off for the zeroing pass",
                        residual=max_form,
                    )
            ops = tuple(_power_entry(base, p) for p in range(1, n))
            cert0 = zero_tuple_vector(
                ops,
                avoid=None,
                start=x * math.sqrt(1.0 - 2.0 ** (-c)),
                start_stage=c,
                tol=HARD_TOL,
                window_budget=meter.limit - meter.used,
            )
            x = cert0.x
            correction_applied = True

    gram, norms, recurrence = _orbit_data(base, x, n)
    checks = _orbit_checks(gram, norms, recurrence, n, eps)
    cert = OrbitCertificate(
        x=x,
        n=n,
        eps=eps,
        gram=gram,
        norms=norms,
        recurrence=recurrence,
        checks=checks,
        params={
            "model": base.kind,
            "spectral_route": route,
            "window_length": m,
            "proof_window_length": m_proof,
            "budget_limited": budget_limited,
            "epsilon_prime": eps_prime,
            "family_residuals": [p.residual for p in family],
            "correction_stage_threshold": c_min,
            "correction_applied": correction_applied,
            "entries_charged": meter.used,
        },
    )
    if not cert.passed():
        worst = max(c["measured"] - c["bound"] for c in checks.values())
        raise NumericalError(
            "orbit certificate failed its own recheck", residual=float(worst)
        )
    return cert


def _power_entry(base, p):
    from .operators import OperatorPower

    return base if p == 1 else OperatorPower(base, p)


# ---------------------------------------------------------------------------
# towers


def _assemble_dft_tower(u, family, n):
    """Stack u and the family into rows of the unitary DFT mix.

    Returns (indices, V) where row j of V holds the values of
    w_j = n^{-1/2} sum_k lambda^{jk} u_k on the shared index set.  Root
    phases are reduced mod n in integers, so the DFT inversion identity
    sum_j w_j = sqrt(n) u_0 suffers no phase drift.
    """
    blocks = [u] + [p.vector for p in family]
    all_idx = np.concatenate([b.indices for b in blocks])
    order = np.argsort(all_idx, kind="stable")
    idx = all_idx[order]
    if len(idx) > 1 and not np.all(np.diff(idx) > 0):
        raise NumericalError("tower blocks overlap; realization bug")
    roots = _unit_roots(n)
    scale = 1.0 / math.sqrt(n)
    V = np.zeros((n, len(idx)), np.complex128)
    offset = 0
    positions = np.empty(len(idx), np.int64)
    positions[order] = np.arange(len(idx))
    for k, b in enumerate(blocks):
        cols = positions[offset : offset + len(b.indices)]
        coef = roots[(np.arange(n) * k) % n] * scale
        V[:, cols] = np.outer(coef, b.values)
        offset += len(b.indices)
    return idx, V


def rokhlin_tower(base, n, eps, u=None, window_budget=None):
    """Orthonormal w_0..w_{n-1} with prescribed mean and links below eps.

    Needs n > max(4 ||T||^2 / eps^2, 1); the refusal reports the smallest
    admissible n.  u is the prescribed mean (default e_0); w_j is the DFT mix
    n^{-1/2} sum_k lambda^{jk} u_k with u_0 = u and u_k approximate
    eigenvectors at the roots of unity, realized disjointly, so Gram(w) = I
    and the mean identity hold to roundoff and the link residuals carry
    exactly ||Tu - u|| spread over sqrt(n) plus the eigenvector residuals.
    """
    n = int(n)
    eps = float(eps)
    if not 0.0 < eps <= 2.0:
        raise DegenerateInputError("eps must lie in (0, 2]")
    nb = base.norm_bound()
    threshold = max(4.0 * nb ** 2 / eps ** 2, 1.0)
    # the strict gate is eps - 2 nb / sqrt(n) > 0; float rounding of the
    # threshold can admit the equality case (eps=0.1 gives 399.99...), so
    # test the expression the construction actually divides by
    if n <= threshold or eps - 2.0 * nb / math.sqrt(n) <= 0.0:
        minimal = int(math.floor(threshold)) + 1
        while eps - 2.0 * nb / math.sqrt(minimal) <= 0.0:
            minimal += 1
        raise PreconditionError(
            f"tower of height {n} needs n > {threshold:g}",
            minimal_n=minimal,
        )
    ok, route = circle_in_pi_essential(base, 1.0)
    if not ok:
        raise PreconditionError(
            "the unit circle is not in the essential approximate point "
            f"spectrum of this {type(base).__name__}"
        )
    if u is None:
        u = WindowVector.basis(0)
    if abs(u.norm() - 1.0) > 1e-9:
        raise DegenerateInputError("prescribed mean must be a unit vector")

    eps_prime_sup = (eps - 2.0 * nb / math.sqrt(n)) / math.sqrt(n)
    eps_prime = eps_prime_sup / 2.0  # half the admissible supremum
    meter = BudgetMeter(window_budget)
    tu_defect = (base.apply(u) - u).norm()
    m_proof = math.ceil(2.0 / eps_prime ** 2)

    u_len = len(u.indices)
    if isinstance(base, DiagonalUnitary):
        m = m_proof  # atoms are free; the tolerance is what m encodes
        budget_limited = False
    else:
        # measured link: sqrt((||Tu-u||^2 + 2(n-1)/m) / n); size the window
        # for a 20% margin under eps, doubled, never below 4n
        d_margin = n * (0.8 * eps) ** 2 - tu_defect ** 2
        d_plain = n * eps ** 2 - tu_defect ** 2
        if d_margin > 0:
            m0 = math.ceil(2.0 * (n - 1) / d_margin)
        else:
            m0 = 2 * math.ceil(2.0 * (n - 1) / d_plain)
        m = min(m_proof, max(2 * m0, 4 * n))
        # stored entries: the n x S tower matrix plus the transient family,
        # S = |supp u| + (n-1) m, so m splits the budget (n-1)(n+1) ways
        affordable = (meter.limit - n * u_len) // ((n - 1) * (n + 1))
        budget_limited = m > affordable
        if budget_limited:
            m = affordable
        if m < 4:
            required = n * u_len + 4 * (n - 1) * (n + 1)
            raise WindowBudgetError(
                f"tower of height {n} needs at least {required} stored "
                f"entries, budget is {meter.limit}",
                required=required,
                budget=meter.limit,
            )

    roots = _unit_roots(n)
    family = approx_eigenvector_family(
        base, roots[1:], m, margin=2, constraints=[u], meter=meter
    )
    meter.charge(n * (u_len + sum(len(p.vector.indices) for p in family)))
    idx, V = _assemble_dft_tower(u, family, n)
    V.setflags(write=False)
    w = [WindowVector(idx, np.array(V[j])) for j in range(n)]

    gram = V @ V.conj().T
    gram_defect = float(np.max(np.abs(gram - np.eye(n))))
    mean_vec = WindowVector(idx, V.sum(axis=0) / math.sqrt(n))
    mean_defect = (mean_vec - u).norm()
    links = np.empty(n)
    for j in range(n):
        links[j] = (base.apply(w[j]) - w[(j + 1) % n]).norm()
    checks = {
        "gram_identity": _check(gram_defect, 1e-10),
        "mean_identity": _check(mean_defect, 1e-12),
        "links": _check(float(np.max(links)), eps, strict=True),
    }
    tower = Tower(
        w=w,
        u=u,
        eps=eps,
        link_residuals=links,
        gram_defect=gram_defect,
        mean_defect=mean_defect,
        sum_defect=None,
        checks=checks,
        params={
            "model": base.kind,
            "spectral_route": route,
            "window_length": m,
            "proof_window_length": m_proof,
            "budget_limited": budget_limited,
            "epsilon_prime": eps_prime,
            "epsilon_prime_supremum": eps_prime_sup,
            "minimal_n": int(math.floor(threshold)) + 1,
            "mean_link_defect": tu_defect,
            "family_residuals": [p.residual for p in family],
            "entries_charged": meter.used,
        },
    )
    if not tower.passed():
        raise NumericalError("tower certificate failed its own recheck")
    return tower


def _snap_classes(n_nodes, n):
    """Nearest admissible phase class 1..n-1 per grid node, ties upward.

    Node i sits at turn i/n_nodes; its scaled position x = i*n/n_nodes is
    rounded to the nearest integer in exact arithmetic, and the forbidden
    classes 0 and n fold onto 1 and n-1, the nearest admissible targets.
    """
    i = np.arange(n_nodes, dtype=np.int64)
    k = (2 * i * n + n_nodes) // (2 * n_nodes)
    k = np.where(k == 0, 1, k)
    k = np.where(k == n, n - 1, k)
    return k


def rotation_tower(grid, n, w0=None, window_budget=None):
    """Zero-sum tower for multiplication by z on a circle grid.

    w_j multiplies w0 by the snapped phase factor e^{i j theta(z)} where
    theta(z) is the nearest nonzero multiple of 2 pi/n, so every node's
    factors run over nontrivial n-th roots of unity: sum_j w_j vanishes
    pointwise exactly, each w_j stays unit, and the links obey
    ||T w_j - w_{j+1}|| <= 2 pi/n.  No mean can be prescribed here; the
    zero sum is the point.
    """
    if not isinstance(grid, MultiplicationGrid):
        raise UnsupportedModelError("rotation towers need a multiplication grid")
    n = int(n)
    if n < 2:
        raise DegenerateInputError("tower height must be at least 2")
    n_nodes = grid.dim
    if n_nodes < 2 * n:
        raise ResolutionError(
            f"{n_nodes} grid nodes cannot resolve {n} phase classes"
        )
    if w0 is None:
        w0 = normalize(grid.embed(np.ones(n_nodes)))
    if abs(w0.norm() - 1.0) > 1e-9:
        raise DegenerateInputError("w0 must be a unit grid vector")
    meter = BudgetMeter(window_budget)
    meter.charge(n * len(w0.indices))

    cls = _snap_classes(n_nodes, n)[np.asarray(w0.indices, np.int64)]
    roots = _unit_roots(n)
    w = []
    for j in range(n):
        factors = roots[(j * cls) % n]
        w.append(WindowVector(w0.indices, w0.values * factors))

    links = np.empty(n)
    for j in range(n):
        links[j] = (grid.apply(w[j]) - w[(j + 1) % n]).norm()
    total = WindowVector.zero()
    for v in w:
        total = total + v
    sum_defect = float(np.max(np.abs(total.values))) if len(total.values) else 0.0
    norm_dev = max(abs(v.norm() - 1.0) for v in w)

    # Gram via class weights; the w_j are NOT near-orthogonal here (the
    # forbidden zero class unbalances the arcs), so this is informational
    weights = np.zeros(n)
    np.add.at(weights, cls, np.abs(w0.values) ** 2)
    gram_row = np.array(
        [np.sum(weights * roots[(d * np.arange(n)) % n]) for d in range(n)]
    )
    gram_defect = float(np.max(np.abs(gram_row[1:])))
    for d in (1, n // 2, n - 1):
        direct = inner(w[d], w[0])
        if abs(direct - gram_row[d]) > 1e-10:
            raise NumericalError(
                "class-weight Gram disagrees with the raw vectors",
                residual=abs(direct - gram_row[d]),
            )

    link_bound = TWO_PI / n
    checks = {
        "zero_sum": _check(sum_defect, 1e-12),
        "links": _check(float(np.max(links)), link_bound),
        "unit_norms": _check(norm_dev, 1e-12),
    }
    tower = Tower(
        w=w,
        u=None,
        eps=link_bound,
        link_residuals=links,
        gram_defect=gram_defect,
        mean_defect=None,
        sum_defect=sum_defect,
        checks=checks,
        params={
            "model": grid.kind,
            "n_nodes": n_nodes,
            "class_counts": np.bincount(cls, minlength=n).tolist(),
            "entries_charged": meter.used,
        },
    )
    if not tower.passed():
        raise NumericalError("rotation tower failed its own recheck")
    return tower
