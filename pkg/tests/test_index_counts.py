import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import polynomial as npoly
from scipy.optimize import linear_sum_assignment

from krein_pencil import (InvalidProblemError, PolyPencil, analyze, companion_oracle,
                          compute_K_infinity, match_oracle, quadratic_counts, verify_local,
                          z_at_infinity, z_formula, z_table)
from krein_pencil.generators import random_pencil, random_quadratic
from krein_pencil.index_counts import has_reflection_symmetry

from conftest import scalar


def test_one_minus_square():
    rep = analyze(scalar(1, 0, -1), local_pairs=[(0.0, 2.0), (0.2, 0.7)])
    assert rep.Z_inf == (1, 1) and rep.Z_table == (1, 1) and rep.n_L0 == 0
    assert [round(c.lambda0, 9) for c in rep.cvs] == [-1.0, 1.0]
    assert [c.kappa for c in rep.cvs] == [1, -1]
    assert rep.sums["sum_sign_kappa"] == -2 and rep.sums["sum_kappa"] == 0
    assert rep.eq1_residual == rep.eq2_residual == 0
    assert [r for *_, r in rep.local_checks] == [0, 0]
    assert rep.ok()


def test_local_identity_by_hand():
    rep = analyze(scalar(1, 0, -1))
    # n(P(0)) - n(P(2)) = 0 - 1 and kappa(1) = -1
    assert verify_local(rep.pencil, 0.0, 2.0, rep.cvs) == 0
    assert verify_local(rep.pencil, 1.0, 2.0, rep.cvs) == 0
    with pytest.raises(ValueError):
        verify_local(rep.pencil, 2.0, 0.0, rep.cvs)


def test_kernel_at_zero():
    rep = analyze(scalar(0, 0, 1))
    assert rep.Z_inf == (0, 0)
    (cv,) = rep.cvs
    assert (cv.Zdown_left, cv.Zdown_right) == (0, 0)
    assert cv.Kcounts[1][:2] == (1, 0)
    assert rep.sums["sum_kappa"] == 0 and rep.eq1_residual == rep.eq2_residual == 0


def test_K_infinity_examples(rng):
    assert compute_K_infinity(scalar(-1, 0, 1)) >= 2
    assert compute_K_infinity(PolyPencil((np.diag([-1.0, -6.0]), np.diag([1.0, 2.0])))) > 3
    for _ in range(5):
        P = random_pencil(3, 2, 3, rng)
        K = compute_K_infinity(P)
        assert all(abs(r.value) < K for r in companion_oracle(P))


def test_z_table_rows():
    quad = PolyPencil((np.diag([1.0, 2.0]), np.eye(2)), (0.0, 0.0, -1.0))
    assert z_table(quad) == (0, 0) == z_at_infinity(quad)
    lead = PolyPencil((np.eye(2), np.zeros((2, 2)), np.diag([1.0, -1.0])), (0.5,))
    assert z_table(lead) == (1, 1) == z_at_infinity(lead)
    odd = PolyPencil((np.eye(3), np.eye(3)), (0.0, 0.0, 0.0, 2.0))
    assert z_table(odd) == (0, 3) == z_at_infinity(odd)


def test_z_table_needs_invertible_lead():
    P = PolyPencil((np.eye(2), np.diag([1.0, 0.0])))
    with pytest.raises(InvalidProblemError):
        z_table(P)


@pytest.mark.parametrize("Kc, expected", [
    ([(1, 0, 0)], (1, 0, 0, 1)),
    ([(0, 1, 0)], (0, 1, 1, 0)),
    ([(0, 0, 1), (1, 0, 0)], (0, 0, 1, 1)),
    ([(0, 0, 1), (0, 0, 1), (0, 1, 0)], (0, 1, 1, 0)),
    ([(1, 1, 0), (0, 0, 0), (1, 0, 0)], (2, 1, 1, 2)),
])
def test_z_formula(Kc, expected):
    assert z_formula(Kc) == expected


def test_oracle_examples():
    assert [r.value for r in companion_oracle(scalar(-1, 0, 1))] == pytest.approx([-1, 1])
    P = PolyPencil((np.diag([1.0, 4.0]), np.zeros((2, 2))), (0.0, 0.0, -1.0))
    vals = sorted((r.value for r in companion_oracle(P)), key=lambda z: z.imag)
    assert vals == pytest.approx([-2j, -1j, 1j, 2j])


def _det_poly(P):
    """det P(lam) expanded by the Leibniz formula."""
    A = P.combined
    n = P.n
    entry = [[A[:, i, j] for j in range(n)] for i in range(n)]
    total = np.zeros(1, dtype=complex)
    for perm in itertools.permutations(range(n)):
        sign = np.linalg.det(np.eye(n)[list(perm)])
        term = np.ones(1, dtype=complex)
        for i, j in enumerate(perm):
            term = npoly.polymul(term, entry[i][j])
        total = npoly.polyadd(total, sign * term)
    return total


@given(st.integers(0, 10**6), st.integers(1, 3), st.integers(1, 2), st.integers(-1, 3))
def test_oracle_matches_determinant(seed, n, p, q):
    P = random_pencil(n, p, q, np.random.default_rng(seed))
    c = np.trim_zeros(_det_poly(P), "b")
    ref = npoly.polyroots(c)
    got = np.array([r.value for r in companion_oracle(P, cluster_tol=0)
                    for _ in range(r.multiplicity)])
    assert got.size == ref.size
    cost = np.abs(got[:, None] - ref[None, :])
    rows, cols = linear_sum_assignment(cost)
    assert np.all(cost[rows, cols] <= 1e-6 * (1 + np.abs(ref[cols])))


def test_decoupled_oscillators():
    P = PolyPencil((np.diag([1.0, 4.0]), np.zeros((2, 2))), (0.0, 0.0, -1.0))
    q = analyze(P).quadratic
    assert (q["n_i"], q["n_r"], q["n_c"], q["z"]) == (4, 0, 0, 0)
    assert q["residual_nsum"] == 0 and q["symmetric"]


def test_one_unstable_oscillator():
    P = PolyPencil((np.diag([-1.0, 4.0]), np.zeros((2, 2))), (0.0, 0.0, -1.0))
    rep = analyze(P)
    q = rep.quadratic
    assert (q["n_r"], q["n_i"], q["n_M"]) == (2, 2, 1)
    assert q["symmetric"]
    for key in ("residual_nsum", "residual_LM5", "residual_indexLM2", "residual_indexLM3"):
        assert q[key] == 0
    assert rep.ok()


def test_reflection_symmetry_detection(rng):
    assert has_reflection_symmetry(random_quadratic(3, rng, real_M=True, imag_K=True))
    assert not has_reflection_symmetry(random_quadratic(3, rng))


@given(st.integers(0, 10**6), st.integers(1, 4))
def test_quadratic_identities(seed, n):
    rng = np.random.default_rng(seed)
    sym = bool(seed % 2)
    P = random_quadratic(n, rng, real_M=sym, imag_K=sym)
    rep = analyze(P)
    q = rep.quadratic
    assert q["residual_nsum"] == 0 and q["residual_LM5"] == 0
    assert q["n_r"] == q["n_r_branch"]
    if sym:
        assert q["symmetric"]
        assert q["residual_indexLM2"] == 0 and q["residual_indexLM3"] == 0


@given(st.integers(0, 10**6), st.integers(1, 4), st.integers(1, 3), st.integers(-1, 3))
def test_global_and_local_identities(seed, n, p, q):
    rng = np.random.default_rng(seed)
    P = random_pencil(n, p, q, rng)
    K = compute_K_infinity(P)
    pairs = np.sort(rng.uniform(-1.2 * K, 1.2 * K, (5, 2)), axis=1)
    rep = analyze(P, local_pairs=[tuple(x) for x in pairs])
    assert rep.eq1_residual == 0 and rep.eq2_residual == 0
    assert all(r == 0 for *_, r in rep.local_checks)
    assert all(not any(r) for r in rep.kernel_residuals)
    assert rep.oracle["match"]


@given(st.integers(0, 10**6))
def test_z_counts_add_up(seed):
    P = random_pencil(3, 2, 1, np.random.default_rng(seed))
    for cv in analyze(P, oracle=False).cvs:
        assert cv.Zdown_left + cv.Zup_left == cv.geo_mult
        assert cv.Zdown_right + cv.Zup_right == cv.geo_mult
        assert cv.alg_mult >= cv.geo_mult


def test_report_dict_is_complete(rng):
    d = analyze(random_pencil(2, 2, 1, rng), local_pairs=[(-1.0, 1.0)]).to_dict()
    for key in ("pencil", "K", "Z_inf", "n_L0", "cvs", "sums", "eq1_residual",
                "eq2_residual", "local_checks", "oracle"):
        assert key in d
    ok, worst, _ = match_oracle(analyze(scalar(-1, 0, 1)).pencil, analyze(scalar(-1, 0, 1)).cvs)
    assert ok and worst < 1e-8


def test_K_infinity_with_singular_lead():
    # diag(lam^3 - 40 lam, lam - 7): the top coefficient has rank one
    P = PolyPencil((np.diag([0.0, -7.0]), np.diag([-40.0, 1.0]), np.zeros((2, 2)),
                    np.diag([1.0, 0.0])))
    K = compute_K_infinity(P)
    assert 7.0 < K < 1e3
    rep = analyze(P)
    assert sorted(round(c.lambda0, 9) for c in rep.cvs) == sorted(
        round(x, 9) for x in (-np.sqrt(40), 0.0, np.sqrt(40), 7.0))
    assert rep.eq1_residual == 0 and rep.eq2_residual == 0 and rep.oracle["match"]


@pytest.mark.parametrize("seed", [1, 11])
def test_multiple_roots_on_congruent_pencil(seed):
    from krein_pencil.generators import congruent_pencil
    P = congruent_pencil([[0, 0, 0, -1], [0, 0, 0, 3], [2]], np.random.default_rng(seed),
                         shift=0.37)
    rep = analyze(P)
    at = [c for c in rep.cvs if abs(c.lambda0 - 0.37) < 1e-9]
    assert len(at) == 1 and at[0].geo_mult == 2
    assert rep.eq1_residual == 0 and rep.eq2_residual == 0 and rep.oracle["match"]
    assert all(not any(r) for r in rep.kernel_residuals)
