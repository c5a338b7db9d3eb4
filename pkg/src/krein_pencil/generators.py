"""Seeded random problems.

Hermitian matrices have entries uniform in ``[-1, 1] + i[-1, 1]`` before
symmetrization.  A prescribed inertia is imposed by spectral surgery: the
eigenvectors of a random Hermitian matrix are kept and its eigenvalues
replaced by values of the requested signs.
"""

from __future__ import annotations

import numpy as np

from .pencil_model import HamiltonianProblem, PolyPencil

__all__ = [
    "random_hermitian",
    "hermitian_with_inertia",
    "random_pencil",
    "random_quadratic",
    "random_canonical",
    "congruent_pencil",
    "engineered_quadratic",
]


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_hermitian(n, rng=None, real=False):
    rng = _rng(rng)
    A = rng.uniform(-1.0, 1.0, (n, n))
    if not real:
        A = A + 1j * rng.uniform(-1.0, 1.0, (n, n))
    return 0.5 * (A + A.conj().T)


def hermitian_with_inertia(n_pos, n_neg, n_zero=0, rng=None, real=False, low=0.5, high=2.0):
    """Random Hermitian matrix with ``(n_pos, n_neg, n_zero)`` eigenvalue signs.

    Nonzero eigenvalues have modulus in ``[low, high]``; the kernel is exact
    up to round-off of the eigenvector basis.
    """
    rng = _rng(rng)
    n = n_pos + n_neg + n_zero
    _, Q = np.linalg.eigh(random_hermitian(n, rng, real))
    w = np.concatenate([rng.uniform(low, high, n_pos),
                        -rng.uniform(low, high, n_neg),
                        np.zeros(n_zero)])
    H = (Q * w) @ Q.conj().T
    return 0.5 * (H + H.conj().T)


def random_pencil(n, p, q, rng=None, g_sign=None, lead_inertia=None):
    """Random pencil with matrix degree ``p`` and scalar degree ``q``.

    ``g_sign`` fixes the sign of ``g_q`` (random otherwise, and always
    nonzero with modulus at least 0.5).  ``lead_inertia = (pos, neg)``
    prescribes the inertia of ``L_p`` via spectral surgery.
    """
    rng = _rng(rng)
    coeffs = [random_hermitian(n, rng) for _ in range(p + 1)]
    if lead_inertia is not None:
        coeffs[p] = hermitian_with_inertia(*lead_inertia, rng=rng)
    g = np.zeros(max(q, 0) + 1)
    if q >= 0:
        g[:q] = rng.uniform(-1.0, 1.0, q)
        s = g_sign if g_sign is not None else rng.choice((-1.0, 1.0))
        g[q] = s * rng.uniform(0.5, 1.5)
    return PolyPencil(tuple(coeffs), tuple(g))


def random_quadratic(n, rng=None, M_inertia=None, real_M=False, imag_K=False):
    """``M + lam K + lam^2 I`` with random Hermitian ``M`` and ``K``.

    ``real_M`` together with ``imag_K`` gives a pencil whose spectrum of
    ``P(lam)`` is even in ``lam``.
    """
    rng = _rng(rng)
    if M_inertia is not None:
        M = hermitian_with_inertia(*M_inertia, rng=rng, real=real_M)
    else:
        M = random_hermitian(n, rng, real=real_M)
    if imag_K:
        B = rng.uniform(-1.0, 1.0, (n, n))
        K = 1j * 0.5 * (B - B.T)
    else:
        K = random_hermitian(n, rng)
    return PolyPencil((M, K), (0.0, 0.0, -1.0))


def random_canonical(n_plus, n_minus=None, rng=None, inertia_plus=None, inertia_minus=None):
    """Canonical Hamiltonian problem with blocks ``L_+`` and ``L_-``.

    ``inertia_plus``/``inertia_minus`` are ``(pos, neg, zero)`` triples.
    """
    rng = _rng(rng)
    n_minus = n_plus if n_minus is None else n_minus
    if n_minus != n_plus:
        raise ValueError("canonical blocks must have equal size")

    def block(inertia):
        if inertia is None:
            return random_hermitian(n_plus, rng, real=True)
        return hermitian_with_inertia(*inertia, rng=rng, real=True)

    return HamiltonianProblem.canonical(block(inertia_plus), block(inertia_minus))


def _herm(A):
    return 0.5 * (A + A.conj().T)


def _random_unitary(n, rng):
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def congruent_pencil(diag_polys, rng=None, q_degree=1, shift=0.0):
    """``Q(lam)^* D(lam) Q(lam)`` with ``D`` diagonal and ``Q(shift)`` invertible.

    ``diag_polys[i]`` lists the coefficients of ``d_i(lam - shift)`` from
    the constant term up.  Congruence by a matrix invertible at ``shift``
    keeps the vanishing order and leading sign of each ``d_i`` there, so
    the branch orders and signs at ``shift`` are known exactly.  Integer
    coefficients keep the pencil exact in floating point when
    ``shift = 0``.
    """
    rng = _rng(rng)
    n = len(diag_polys)
    Q = [rng.integers(-2, 3, (n, n)).astype(float) for _ in range(q_degree + 1)]
    Q[0] = Q[0] + (2 * n + 1) * np.eye(n)
    dd = max(len(p) for p in diag_polys) - 1
    D = [np.diag([float(p[k]) if k < len(p) else 0.0 for p in diag_polys])
         for k in range(dd + 1)]
    C = [np.zeros((n, n)) for _ in range(2 * q_degree + dd + 1)]
    for a, Qa in enumerate(Q):
        for b, Db in enumerate(D):
            for c, Qc in enumerate(Q):
                C[a + b + c] += Qa.T @ Db @ Qc
    P = PolyPencil(tuple(C))
    return P.shifted(-shift) if shift else P


def engineered_quadratic(order, rng=None, extra_kernel=False, n=4):
    """``M + lam L + lam^2 I`` whose kernel vector at 0 has a branch of ``order`` 1, 2 or 3.

    With ``extra_kernel`` the kernel is two-dimensional and the second
    branch is simple; its coupling to the first makes the kernel part of
    the first branch's derivative nonzero.  A random unitary congruence
    hides the coordinates.
    """
    rng = _rng(rng)
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    k = 2 if extra_kernel else 1
    if n < k + 1:
        raise ValueError("n too small")
    while True:
        a = rng.choice((-1.0, 1.0), n - k) * rng.uniform(0.5, 2.0, n - k)
        L = random_hermitian(n, rng)
        L[0, :k] = 0.0
        L[:k, 0] = 0.0
        if extra_kernel:
            L[1, 1] = rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.5)
        if order == 1:
            L[0, 0] = rng.choice((-1.0, 1.0)) * rng.uniform(0.5, 1.5)
        # (e1, H_2 e1) = 1 - sum_j |L_1j|^2 / a_j over the range of M
        s = float(np.sum(np.abs(L[0, k:]) ** 2 / a))
        if order == 3:
            if s < 0.2:
                continue
            t = 1.0 / np.sqrt(s)
            L[0, k:] *= t
            L[k:, 0] *= t
        elif order == 2 and abs(1.0 - s) < 0.2:
            continue
        break
    M = np.diag(np.concatenate([np.zeros(k), a]))
    Q = _random_unitary(n, rng)
    M = Q @ M @ Q.conj().T
    L = Q @ L @ Q.conj().T
    return PolyPencil((_herm(M), _herm(L)), (0.0, 0.0, -1.0))
