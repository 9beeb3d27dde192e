import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from dynmap.errors import DimensionError, NotHermitian, SingularMap
from dynmap.models import SIGMA_X, SIGMA_Z, make_family, eval_family
from dynmap.superop import (
    DensityMatrix,
    DynamicalMatrix,
    KrausSet,
    ProcessMatrix,
    apply,
    determinant,
    hermitian_basis,
    hermitian_eigenvalues,
    intermediate_map,
    invert,
    is_cp,
    is_hermiticity_preserving,
    is_trace_preserving,
    kraus_to_process,
    matrix_from_json,
    matrix_to_json,
    min_singular_value_and_det,
    pure_state,
    reshuffle,
    reshuffle_matrix,
    sandwich_superop,
    vectorize,
)

finite_complex = st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False)


def ad_process(t, gamma=1.0):
    return eval_family(make_family("amplitude-damping", gamma=gamma, t_max=10), t)


def random_kraus(d, k, seed):
    """Kraus set cut from a random isometry C^d -> C^(dk)."""
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(d * k, d)) + 1j * rng.normal(size=(d * k, d))
    q, _ = np.linalg.qr(z)
    return KrausSet(tuple(q[i * d:(i + 1) * d, :] for i in range(k)))


def test_vectorization_convention():
    rng = np.random.default_rng(1)
    X, Y, rho = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    lhs = vectorize(X @ rho @ Y.conj().T)
    rhs = sandwich_superop(X, Y) @ vectorize(rho)
    assert np.allclose(lhs, rhs, atol=1e-12)
    assert np.array_equal(vectorize(np.array([[1, 2], [3, 4]])), np.array([1, 2, 3, 4]))


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(complex, (4, 4), elements=finite_complex))
def test_reshuffle_is_an_involution(mat):
    assert np.array_equal(reshuffle_matrix(reshuffle_matrix(mat)), mat)


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 3]), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_kraus_maps_are_cp_and_tp(d, k, seed):
    A = kraus_to_process(random_kraus(d, k, seed))
    assert is_trace_preserving(A)
    assert is_hermiticity_preserving(A)
    assert is_cp(reshuffle(A)).cp


def test_reshuffle_switches_representation():
    A = ad_process(0.5)
    B = reshuffle(A)
    assert isinstance(B, DynamicalMatrix)
    back = reshuffle(B)
    assert isinstance(back, ProcessMatrix)
    assert np.array_equal(back.mat, A.mat)
    with pytest.raises(TypeError):
        reshuffle(A.mat)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_amplitude_damping_choi_spectrum(t):
    B = reshuffle(ad_process(t))
    e2 = math.exp(-2 * t)
    assert np.allclose(hermitian_eigenvalues(B).values, sorted([0, 0, 1 - e2, 1 + e2]), atol=1e-10)
    assert np.trace(B.mat).real == pytest.approx(2.0)


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0])
def test_amplitude_damping_process_spectrum(t):
    A = ad_process(t).mat
    for lam in (1.0, math.exp(-t), math.exp(-2 * t)):
        assert abs(determinant(A - lam * np.eye(4))) < 1e-8


def test_kraus_and_closed_form_agree():
    params = make_family("amplitude-damping", gamma=0.7).params
    for t in (0.0, 0.3, 1.5):
        assert np.allclose(kraus_to_process(params.kraus(t)).mat, params.process(t), atol=1e-12)


def test_trace_preservation_detects_scaled_map():
    assert is_trace_preserving(ProcessMatrix.identity(2))
    assert not is_trace_preserving(ProcessMatrix(0.5 * np.eye(4)))


def test_cp_detects_transpose():
    # transpose map: TP and HP but not CP
    T = np.zeros((4, 4))
    for a in range(2):
        for b in range(2):
            T[2 * b + a, 2 * a + b] = 1
    A = ProcessMatrix(T)
    assert is_trace_preserving(A)
    verdict = is_cp(reshuffle(A))
    assert not verdict.cp
    assert verdict.min_eig == pytest.approx(-1.0)


def test_hermitian_eigenvalues_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))


def test_determinant_sign_and_singular():
    assert determinant(np.array([[0, 1], [1, 0]])) == pytest.approx(-1)
    assert determinant(np.zeros((4, 4))) == 0
    rng = np.random.default_rng(7)
    M = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert determinant(M) == pytest.approx(np.linalg.det(M), rel=1e-12)


def test_min_singular_value_is_below_smallest_eigenvalue():
    for t in (0.5, 1.0, 2.0):
        min_sv, max_sv, det = min_singular_value_and_det(ad_process(t))
        assert 0 < min_sv <= math.exp(-2 * t) + 1e-12
        assert det.real == pytest.approx(math.exp(-4 * t), rel=1e-10)
        assert max_sv >= 1.0


def test_invert_and_intermediate_map():
    A_t, A_s = ad_process(1.5), ad_process(0.5)
    assert np.allclose((invert(A_s) @ A_s).mat, np.eye(4), atol=1e-12)
    assert np.allclose(intermediate_map(A_t, A_s).mat, ad_process(1.0).mat, atol=1e-12)


def test_invert_rejects_singular_map():
    f = make_family("decay-g", preset="linear-cutoff", tstar=1.0, t_max=2.0)
    with pytest.raises(SingularMap) as err:
        invert(eval_family(f, 1.5))
    assert err.value.min_sv < 1e-12


def test_density_matrix_validation():
    rho = pure_state([1, 1j])
    assert rho.dim == 2
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(2))
    with pytest.raises(NotHermitian):
        DensityMatrix(np.array([[0.5, 0.5], [0, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5]))
    assert DensityMatrix(np.diag([1.5, -0.5]), require_psd=False).dim == 2


def test_kraus_set_rejects_incomplete_set():
    with pytest.raises(ValueError):
        KrausSet((np.diag([1.0, 0.5]),))


def test_process_matrix_shape_checks():
    with pytest.raises(DimensionError):
        ProcessMatrix(np.eye(3))
    with pytest.raises(DimensionError):
        ProcessMatrix(np.eye(81))


def test_apply_amplitude_damping_to_excited_state():
    out = apply(ad_process(0.5), pure_state([0, 1]))
    assert out[1, 1].real == pytest.approx(math.exp(-1))
    assert out[0, 0].real == pytest.approx(1 - math.exp(-1))


@pytest.mark.parametrize("d", [2, 3, 4])
def test_hermitian_basis_is_orthonormal(d):
    basis = hermitian_basis(d)
    assert len(basis) == d * d
    gram = np.array([[np.trace(F.conj().T @ G) for G in basis] for F in basis])
    assert np.allclose(gram, np.eye(d * d), atol=1e-12)
    assert all(abs(np.trace(F)) < 1e-12 for F in basis[1:])
    assert all(np.allclose(F, F.conj().T) for F in basis)


def test_qubit_basis_is_scaled_paulis():
    basis = hermitian_basis(2)
    assert np.allclose(basis[1], SIGMA_X / math.sqrt(2))
    assert np.allclose(basis[3], SIGMA_Z / math.sqrt(2))


def test_matrix_json_roundtrip():
    A = ad_process(0.5)
    obj = matrix_to_json(A)
    assert obj["dim"] == 2
    assert np.array_equal(matrix_from_json(obj), A.mat)
    with pytest.raises(DimensionError):
        matrix_from_json({"dim": 3, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]]})
    with pytest.raises(DimensionError):
        matrix_from_json({"re": [[1]]})
