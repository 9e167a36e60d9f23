import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orbitforge.errors import (
    DegenerateInputError,
    DomainError,
    PreconditionError,
    UnsupportedModelError,
    WindowBudgetError,
)
from orbitforge.nrange import (
    BoundaryResult,
    diagonal_compression_subspace,
    nr_boundary,
    numerical_radius,
    radius_norm_bounds,
    we_membership_witness,
)
from orbitforge.operators import (
    BilateralShift,
    ConstantWeights,
    DenseOperator,
    DiagonalUnitary,
    MultiplicationGrid,
    OperatorPower,
    PeriodicPhases,
    PeriodicWeights,
    QuadraticIrrationalRotation,
    UnilateralShift,
    apply_power,
    power_tuple,
)
from orbitforge.vectors import WindowVector, inner


def _rng(seed):
    return np.random.default_rng(seed)


def _random_matrix(n, seed):
    r = _rng(seed)
    return r.standard_normal((n, n)) + 1j * r.standard_normal((n, n))


# ---------------------------------------------------------------------------
# dense numerical range


def test_nilpotent_block_radius_is_half():
    j2 = np.array([[0.0, 1.0], [0.0, 0.0]], complex)
    w, theta = numerical_radius(j2)
    assert abs(w - 0.5) < 1e-12
    b = nr_boundary(j2, 128)
    # the range is the closed disk of radius 1/2 centered at 0
    assert abs(b.boundary_radius() - 0.5) < 1e-10
    assert np.all(np.abs(np.abs(b.points) - 0.5) < 1e-10)


def test_hermitian_range_is_real_segment():
    a = np.diag([1.0, -2.0, 0.5]).astype(complex)
    w, _ = numerical_radius(a)
    assert abs(w - 2.0) < 1e-10
    b = nr_boundary(a, 64)
    assert np.max(np.abs(b.points.imag)) < 1e-10
    assert np.min(b.points.real) > -2.0 - 1e-10
    assert np.max(b.points.real) < 1.0 + 1e-10


def test_normal_matrix_radius_is_max_eigenvalue_modulus():
    eigs = np.array([1.0, 1j, -0.3 - 0.4j])
    w, _ = numerical_radius(np.diag(eigs))
    assert abs(w - 1.0) < 1e-10


def test_boundary_points_dominated_by_support_function():
    a = _random_matrix(5, 7)
    b = nr_boundary(a, 48)
    # every returned point must lie inside every supporting half-plane
    for p in b.points:
        slack = b.support - np.real(np.exp(-1j * b.thetas) * p)
        assert np.min(slack) > -1e-9


def test_radius_against_fine_grid():
    for seed in range(4):
        a = _random_matrix(6, seed)
        w, _ = numerical_radius(a, n_angles=180)
        grid = max(
            np.linalg.eigvalsh(
                (np.exp(-1j * t) * a + np.exp(1j * t) * a.conj().T) / 2.0
            )[-1]
            for t in np.linspace(0, 2 * math.pi, 2000, endpoint=False)
        )
        assert w >= grid - 1e-9
        assert w <= grid + 1e-4


def test_radius_norm_two_sided_inequality():
    for seed in range(6):
        a = _random_matrix(4, 100 + seed)
        out = radius_norm_bounds(a, n_angles=240)
        assert out["lower_holds"]
        assert out["upper_holds"]
        true_norm = np.linalg.norm(a, 2)
        assert out["radius"] <= true_norm + 1e-9
        assert true_norm <= 2.0 * out["radius"] + 1e-9


def test_boundary_rejects_lazy_models():
    with pytest.raises(UnsupportedModelError):
        nr_boundary(BilateralShift())
    with pytest.raises(DegenerateInputError):
        nr_boundary(np.eye(2, dtype=complex), n_angles=2)


def test_numerical_radius_accepts_dense_operator_wrapper():
    a = _random_matrix(3, 42)
    w1, _ = numerical_radius(a, 120)
    w2, _ = numerical_radius(DenseOperator(a), 120)
    assert abs(w1 - w2) < 1e-12


# ---------------------------------------------------------------------------
# membership witnesses: routes


def _measure_shift_form(x, power):
    """<S^p x, x> for the plain bilateral shift, computed from raw arrays."""
    total = 0j
    pos = {int(i): v for i, v in zip(x.indices, x.values)}
    for i, v in pos.items():
        if i + power in pos:
            total += v * np.conj(pos[i + power])
    return total


def test_power_profile_witness_uses_poisson_route():
    s = BilateralShift()
    lam = 0.5
    mu = [lam ** p for p in range(1, 5)]
    res = we_membership_witness(power_tuple(s, 4), mu, 0.05)
    assert res.route == "poisson"
    assert res.realization == "shift_windows"
    assert res.max_defect() <= 0.05
    assert abs(res.vector.norm() - 1.0) < 1e-12
    # independent re-measurement from the raw entries
    for p, target in zip(res.powers, mu):
        got = _measure_shift_form(res.vector, p)
        assert abs(got - target) <= 0.05


def test_generic_targets_use_moment_gadgets():
    s = BilateralShift()
    mu = [0.03 + 0.02j, -0.01j, 0.02]
    res = we_membership_witness(s, mu, 0.01)
    assert res.route == "moment_gadgets"
    assert res.max_defect() <= 0.01
    for p, target in zip(res.powers, mu):
        assert abs(_measure_shift_form(res.vector, p) - target) <= 0.01


def test_on_circle_profile_uses_single_eigen_window():
    s = BilateralShift()
    lam = complex(np.exp(1j * 0.7))
    mu = [lam ** p for p in range(1, 4)]
    res = we_membership_witness(power_tuple(s, 3), mu, 0.05)
    assert res.route == "eigen_window"
    assert res.params["atom_count"] == 1
    assert res.max_defect() <= 0.05


def test_witness_on_unilateral_shift():
    res = we_membership_witness(power_tuple(UnilateralShift(), 3), [0.4, 0.16, 0.064], 0.02)
    assert res.max_defect() <= 0.02
    assert np.all(res.vector.indices >= 0)


def test_witness_on_weighted_shift_circle_radius_two():
    s = BilateralShift(weights=ConstantWeights(2.0j))
    lam = 0.8 + 0.2j  # inside the radius-2 circle
    mu = [lam, lam ** 2]
    res = we_membership_witness(power_tuple(s, 2), mu, 0.05)
    assert res.route == "poisson"
    assert res.max_defect() <= 0.05


def test_witness_rejects_targets_outside_admissible_radius():
    s = BilateralShift()
    # not a power profile and far above r = 1/(2^2 - 1)
    with pytest.raises(DomainError) as exc:
        we_membership_witness(s, [0.9, 0.1], 0.01)
    assert exc.value.admissible_radius == pytest.approx(1.0 / 3.0)


def test_witness_refuses_dense_and_grid_models():
    with pytest.raises(PreconditionError):
        we_membership_witness(DenseOperator(np.eye(3, dtype=complex)), [0.1], 0.01)
    grid = MultiplicationGrid(8)
    with pytest.raises(PreconditionError):
        we_membership_witness(grid, [0.1], 0.01)


def test_witness_refuses_uncatalogued_rules():
    varying = BilateralShift(weights=PeriodicWeights([1.0, 4.0]))
    with pytest.raises(UnsupportedModelError):
        we_membership_witness(varying, [0.1], 0.01)
    periodic = DiagonalUnitary(PeriodicPhases([0.0, 0.25]))
    with pytest.raises(UnsupportedModelError):
        we_membership_witness(periodic, [0.1], 0.01)


def test_witness_input_validation():
    s = BilateralShift()
    with pytest.raises(DegenerateInputError):
        we_membership_witness(s, [], 0.01)
    with pytest.raises(DegenerateInputError):
        we_membership_witness(s, [0.1], 0.0)
    with pytest.raises(DegenerateInputError):
        we_membership_witness((s, s), [0.1, 0.2], 0.01)  # duplicate power 1
    with pytest.raises(UnsupportedModelError):
        we_membership_witness(
            (s, OperatorPower(UnilateralShift(), 2)), [0.1, 0.2], 0.01
        )
    with pytest.raises(DegenerateInputError):
        we_membership_witness((s,), [0.1, 0.2], 0.01)


def test_witness_budget_cap():
    s = BilateralShift()
    with pytest.raises(WindowBudgetError) as exc:
        we_membership_witness(s, [0.1, 0.05], 0.001, window_budget=10)
    assert exc.value.budget == 10
    assert exc.value.required > 10


# ---------------------------------------------------------------------------
# membership witnesses: constraints and orthogonality


def test_witness_orthogonal_to_constraints_and_their_power_images():
    s = BilateralShift()
    c = WindowVector.from_pairs([(0, 1.0), (3, 0.5j), (7, -0.25)])
    res = we_membership_witness(power_tuple(s, 3), [0.3, 0.09, 0.027], 0.02,
                                constraints=[c])
    x = res.vector
    assert inner(x, c) == 0
    for p in range(1, 4):
        assert inner(x, apply_power(s, c, p)) == 0
        assert inner(apply_power(s, x, p), c) == 0
    # support starts beyond the constraint, with a gap covering the powers
    assert int(x.indices[0]) > 7 + 3


def test_sequential_witnesses_have_disjoint_supports():
    s = BilateralShift()
    first = we_membership_witness(s, [0.2, 0.04], 0.02)
    second = we_membership_witness(s, [0.2, 0.04], 0.02,
                                   constraints=[first.vector])
    overlap = np.intersect1d(first.vector.indices, second.vector.indices)
    assert len(overlap) == 0
    assert inner(first.vector, second.vector) == 0


def test_diagonal_witness_respects_constraint_indices():
    d = DiagonalUnitary(QuadraticIrrationalRotation())
    first = we_membership_witness(d, [0.05 + 0.02j], 0.02)
    second = we_membership_witness(d, [0.05 + 0.02j], 0.02,
                                   constraints=[first.vector])
    overlap = np.intersect1d(first.vector.indices, second.vector.indices)
    assert len(overlap) == 0
    assert second.max_defect() <= 0.02


def test_diagonal_witness_measures_against_recomputed_phases():
    d = DiagonalUnitary(QuadraticIrrationalRotation())
    mu = [0.04 - 0.03j, 0.02j]
    res = we_membership_witness(d, mu, 0.02)
    assert res.realization == "diagonal_indices"
    phases = d.phase_rule.phases(res.vector.indices)  # radians
    w = np.abs(res.vector.values) ** 2
    for p, target in zip(res.powers, mu):
        got = np.sum(w * np.exp(1j * p * phases))
        assert abs(got - target) <= 0.02


@settings(max_examples=25, deadline=None)
@given(
    re=st.floats(-0.05, 0.05),
    im=st.floats(-0.05, 0.05),
    seed=st.integers(0, 10),
)
def test_witness_hits_random_small_targets(re, im, seed):
    s = BilateralShift()
    r = _rng(seed)
    second = 0.05 * (r.standard_normal() + 1j * r.standard_normal()) / 2.0
    mu = [complex(re, im), second]
    res = we_membership_witness(s, mu, 0.01)
    assert res.max_defect() <= 0.01
    assert abs(res.vector.norm() - 1.0) < 1e-12


# ---------------------------------------------------------------------------
# compression subspaces


def test_compression_looks_like_scalar_powers():
    s = BilateralShift()
    lam = 0.4 + 0.1j
    out = diagonal_compression_subspace(s, lam, n=3, dim=3, delta=0.05)
    assert out.passed()
    assert out.subspace.dim == 3
    assert out.gram_defect < 1e-12
    from orbitforge.operators import compress

    for p in range(1, 4):
        comp = compress(OperatorPower(s, p), out.subspace)
        off = comp - np.diag(np.diag(comp))
        assert np.max(np.abs(off)) == 0.0
        assert np.max(np.abs(np.diag(comp) - lam ** p)) <= 0.05


def test_compression_on_diagonal_model():
    d = DiagonalUnitary(QuadraticIrrationalRotation())
    out = diagonal_compression_subspace(d, 0.3, n=2, dim=2, delta=0.05)
    assert out.passed()
    assert out.gram_defect < 1e-12


def test_compression_rejects_lambda_outside_circle():
    with pytest.raises(DomainError):
        diagonal_compression_subspace(BilateralShift(), 1.5, n=2, dim=2, delta=0.05)


def test_compression_input_validation():
    with pytest.raises(DegenerateInputError):
        diagonal_compression_subspace(BilateralShift(), 0.3, n=0, dim=2)
    with pytest.raises(DegenerateInputError):
        diagonal_compression_subspace(BilateralShift(), 0.3, n=2, dim=0)
