import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beacon_game.errors import ValidationError
from beacon_game.hermitian import (
    eigh,
    is_psd,
    jacobi_eigh,
    max_eigenpair,
    min_eigenvalue,
    normalize_phase,
    psd_sqrt,
    quad_forms,
    rayleigh,
    sample_unit_sphere,
)
from beacon_game.rng import RandomStream


def random_hermitian(rng, m, psd=False):
    z = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return z @ z.conj().T if psd else 0.5 * (z + z.conj().T)


def same_up_to_phase(u, v, tol=1e-10):
    return abs(abs(np.vdot(u, v)) - np.linalg.norm(u) * np.linalg.norm(v)) < tol


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_identity_and_diagonal(method):
    vals, _ = eigh(np.eye(3), method)
    assert np.allclose(vals, [1, 1, 1])
    vals, vecs = eigh(np.diag([2.0, 1.0]), method)
    assert np.allclose(vals, [1, 2])
    assert same_up_to_phase(vecs[:, 0], [0, 1]) and same_up_to_phase(vecs[:, 1], [1, 0])


@pytest.mark.parametrize("method", ["lapack", "jacobi"])
def test_rank_one_plus_half_identity(method):
    h = np.array([1, 1j])
    vals, vecs = eigh(np.outer(h, h.conj()) + 0.5 * np.eye(2), method)
    assert np.allclose(vals, [0.5, 2.5], atol=1e-12)
    assert same_up_to_phase(vecs[:, 1], h / np.sqrt(2))


def test_max_eigenpair_cases():
    lam, v = max_eigenpair(np.diag([2.0, 1.0]))
    assert lam == pytest.approx(2) and np.allclose(v, [1, 0])
    h = np.array([1, 1j])
    lam, v = max_eigenpair(np.outer(h, h.conj()))
    assert lam == pytest.approx(2) and same_up_to_phase(v, h / np.sqrt(2))
    lam, v = max_eigenpair(np.zeros((3, 3)))
    lam2, v2 = max_eigenpair(np.zeros((3, 3)))
    assert lam == 0 and np.linalg.norm(v) == pytest.approx(1) and np.array_equal(v, v2)


def test_min_eigenvalue_cases():
    assert min_eigenvalue(np.diag([2.0, 1.0])) == pytest.approx(1)
    assert min_eigenvalue(np.eye(4)) == pytest.approx(1)
    h = np.array([0.3, 1j, -2.0])
    assert min_eigenvalue(np.outer(h, h.conj()) + 0.7 * np.eye(3)) == pytest.approx(0.7)


def test_rayleigh_cases():
    assert rayleigh(np.diag([2.0, 1.0]), [1, 0]) == pytest.approx(2)
    assert rayleigh(np.diag([2.0, 1.0]), np.array([1, 1]) / np.sqrt(2)) == pytest.approx(1.5)
    w = sample_unit_sphere(5, 3)
    assert rayleigh(np.eye(5), w) == pytest.approx(1)
    with pytest.raises(ValidationError):
        rayleigh(np.eye(2), [1, 1])


def test_non_hermitian_rejected():
    with pytest.raises(ValidationError):
        eigh(np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValidationError):
        eigh(np.ones((2, 3)))


def test_jacobi_matches_lapack():
    rng = np.random.default_rng(0)
    for m in (1, 2, 3, 5, 10):
        Q = random_hermitian(rng, m)
        lv, lV = eigh(Q, "lapack")
        jv, jV = eigh(Q, "jacobi")
        assert np.allclose(lv, jv, atol=1e-12 * max(1, np.abs(lv).max()))
        assert np.linalg.norm(Q @ jV - jV * jv) < 1e-10 * np.linalg.norm(Q)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1), st.sampled_from(["lapack", "jacobi"]))
def test_decomposition_invariants(m, seed, method):
    Q = random_hermitian(np.random.default_rng(seed), m)
    vals, V = eigh(Q, method)
    scale = max(1.0, np.linalg.norm(Q))
    assert np.all(np.diff(vals) >= 0)
    assert np.linalg.norm(V.conj().T @ V - np.eye(m)) < 1e-10
    assert np.linalg.norm(Q @ V - V * vals) < 1e-9 * scale
    assert vals.sum() == pytest.approx(np.trace(Q).real, abs=1e-9 * scale)
    # Rayleigh sandwich for random unit vectors.
    for w in sample_unit_sphere(m, seed, size=5):
        r = rayleigh(Q, w)
        assert vals[0] - 1e-9 * scale <= r <= vals[-1] + 1e-9 * scale


def test_phase_normalisation_is_deterministic():
    rng = np.random.default_rng(5)
    Q = random_hermitian(rng, 4)
    _, V = eigh(Q)
    rotated = V * np.exp(1j * rng.uniform(0, 2 * np.pi, 4))
    assert np.allclose(normalize_phase(rotated), V)
    idx = np.argmax(np.abs(V), axis=0)
    piv = V[idx, np.arange(4)]
    assert np.all(piv.imag == 0) and np.all(piv.real >= 0)


def test_quad_forms_matches_loop():
    rng = np.random.default_rng(2)
    A = np.stack([random_hermitian(rng, 3, psd=True) for _ in range(4)])
    W = sample_unit_sphere(3, 1, size=6)
    loop = np.array([[np.vdot(w, a @ w).real for a in A] for w in W])
    assert np.allclose(quad_forms(A, W), loop)
    assert np.allclose(quad_forms(A, W[0]), loop[0])


def test_psd_helpers():
    rng = np.random.default_rng(3)
    P = random_hermitian(rng, 4, psd=True)
    R = psd_sqrt(P)
    assert np.allclose(R @ R, P)
    assert is_psd(P) and not is_psd(-P)
    with pytest.raises(ValidationError):
        psd_sqrt(-P)


def test_unit_sphere_sampling():
    w = sample_unit_sphere(1, 7)
    assert abs(w[0]) == pytest.approx(1)
    s = RandomStream(11, 2)
    assert np.array_equal(sample_unit_sphere(4, s), sample_unit_sphere(4, s))
    W = sample_unit_sphere(2, 9, size=100_000)
    assert abs(np.mean(np.abs(W[:, 0]) ** 2) - 0.5) < 0.01
    with pytest.raises(ValidationError):
        sample_unit_sphere(0, 1)
