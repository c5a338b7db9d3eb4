import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from krein_pencil import (HamiltonianProblem, InvalidProblemError, generalized_kernel,
                          jl_spectrum, kernel_form, theorem1_check, theorem2_bound)
from krein_pencil.generators import random_canonical, random_hermitian

J2 = np.array([[0, -1], [1, 0.]])


def _direct_counts(H):
    nu = np.linalg.eigvals(H.J @ H.L)
    tol = 1e-7
    k_r = int(np.sum((nu.real > tol) & (np.abs(nu.imag) <= tol)))
    k_c = int(np.sum((nu.real > tol) & (nu.imag > tol)))
    return k_r, k_c


def test_saddle():
    H = HamiltonianProblem(J2, np.diag([-1.0, 1.0]))
    spec = jl_spectrum(H)
    assert (spec.k_r, spec.k_c, spec.n_uns) == (1, 0, 1)
    t = theorem1_check(H, spec)
    assert (t.residual, t.n_L, t.n_D, t.k_i_minus) == (0, 1, 0, 0)


def test_centre_positive():
    H = HamiltonianProblem(J2, np.eye(2))
    spec = jl_spectrum(H)
    assert spec.n_uns == 0
    kap = {round(lam, 9): kp - km for lam, _, kp, km in spec.imaginary}
    assert kap == {-1.0: 1, 1.0: -1}
    assert spec.k_i_minus == 0
    assert theorem1_check(H, spec).residual == 0


def test_centre_negative():
    H = HamiltonianProblem(J2, -np.eye(2))
    spec = jl_spectrum(H)
    assert spec.n_uns == 0 and spec.k_i_minus == 1
    t = theorem1_check(H, spec)
    assert (t.residual, t.n_L, t.n_D) == (0, 2, 0)


def test_nls_like_toy():
    H = HamiltonianProblem.canonical(np.diag([1.0, 2.0]), np.diag([-1.0, 3.0]))
    spec = jl_spectrum(H)
    assert (spec.k_r, spec.k_c) == _direct_counts(H)
    assert spec.n_uns == 1
    assert theorem1_check(H, spec).residual == 0


def test_gate_skips_long_kernel_chains():
    H = HamiltonianProblem(J2, np.zeros((2, 2)))
    t = theorem1_check(H)
    assert t.residual is None and "gKer" in t.skipped


def test_gate_skips_kernels_without_chains():
    H = HamiltonianProblem.canonical(np.diag([0.0, 1.0]), np.diag([0.0, 2.0]))
    assert generalized_kernel(H).shape[1] == 2
    assert theorem1_check(H).skipped is not None


@pytest.mark.parametrize("lm, n_D", [((1.0, 2.0), 0), ((-1.0, 2.0), 1)])
def test_kernel_chains_of_length_two(lm, n_D):
    # JL (e, 0) = 0 and JL (0, -L_-^{-1} e) = (e, 0); D = (e, L_-^{-1} e)
    H = HamiltonianProblem.canonical(np.diag([0.0, 1.0]), np.diag(lm))
    G = generalized_kernel(H)
    JL = H.J @ H.L
    assert G.shape[1] == 2 and np.allclose(JL @ JL @ G, 0, atol=1e-10)
    kf = kernel_form(H)
    assert kf.V_basis.shape[1] == 1 and kf.n_D == n_D
    t = theorem1_check(H)
    assert t.residual == 0 and t.n_D == n_D


def test_singular_J_rejected():
    with pytest.raises(InvalidProblemError):
        HamiltonianProblem(np.zeros((2, 2)), np.eye(2))


def test_inertia_bound_examples(rng):
    t = theorem2_bound(HamiltonianProblem.canonical(np.array([[1.0]]), np.array([[-1.0]])))
    assert (t.lower_bound, t.k_r, t.holds) == (1, 1, True)
    t = theorem2_bound(HamiltonianProblem.canonical(np.eye(2), np.eye(2)))
    assert (t.lower_bound, t.k_r, t.holds) == (0, 0, True)
    H = random_canonical(3, rng=rng, inertia_plus=(3, 0, 0), inertia_minus=(2, 1, 0))
    t = theorem2_bound(H)
    assert t.lower_bound == 1 and t.holds
    assert t.k_r == _direct_counts(H)[0]


def test_inertia_bound_needs_structure():
    with pytest.raises(InvalidProblemError):
        theorem2_bound(HamiltonianProblem(J2, np.eye(2)))


@given(st.integers(0, 10**6), st.integers(1, 3))
def test_reflection_symmetry_of_spectrum(seed, m):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(2 * m, 2 * m))
    J = B - B.T + 3 * np.kron(np.eye(m), J2)
    H = HamiltonianProblem(J, random_hermitian(2 * m, rng, real=True))
    spec = jl_spectrum(H)
    assert spec.reflection_ok and spec.hamiltonian_symmetry
    assert (spec.k_r, spec.k_c) == _direct_counts(H)
    assert spec.notes == ()


@given(st.integers(0, 10**6), st.integers(1, 5))
def test_unstable_count_on_random_canonical(seed, n):
    H = random_canonical(n, rng=np.random.default_rng(seed))
    spec = jl_spectrum(H)
    assert (spec.k_r, spec.k_c) == _direct_counts(H)
    t = theorem1_check(H, spec)
    assert t.residual == 0
