"""Krein indices of real characteristic values, computed three ways.

* graphically, from the vanishing order and leading sign of each eigencurve;
* from the Gram matrix of the indefinite form on a chain of root vectors;
* from the recursion on nested kernel subspaces, where the number of
  branches vanishing to order exactly ``m`` with positive (negative)
  ``m``-th derivative is the inertia of a Hermitian form on the subspace
  left over after order ``m - 1``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .branches import (BranchDerivatives, branch_derivatives, tau_zero)
from .pencil_model import NumericalFailure, eval_pencil

__all__ = [
    "RootChain",
    "KernelRecursionState",
    "ToleranceWarning",
    "graphical_krein",
    "chain_from_branch",
    "chain_residuals",
    "gram_matrix_linear",
    "gram_matrix_quadratic",
    "compositions",
    "lambda_operators",
    "kernel_recursion",
    "krein_signature_of_cv",
    "inertia",
]


class ToleranceWarning(RuntimeWarning):
    """A rank decision fell close to the zero threshold."""


def graphical_krein(m, eta):
    """Graphical Krein indices ``(kappa+, kappa-)`` of one eigencurve.

    ``m`` is the vanishing order at the characteristic value and ``eta``
    the sign of the ``m``-th derivative there.
    """
    if m < 1 or eta not in (1, -1):
        raise ValueError("need m >= 1 and eta = +1 or -1")
    if m % 2 == 0:
        return m // 2, m // 2
    return (m + eta) // 2, (m - eta) // 2


def inertia(H, tol):
    """Counts ``(positive, negative, zero)`` of Hermitian ``H`` at threshold ``tol``."""
    w = np.linalg.eigvalsh(H) if H.size else np.zeros(0)
    return int(np.sum(w > tol)), int(np.sum(w < -tol)), int(np.sum(np.abs(w) <= tol))


@dataclass(frozen=True, eq=False)
class RootChain:
    lambda0: float
    vectors: tuple
    source: str = "manual"

    def __len__(self):
        return len(self.vectors)


def chain_residuals(P, chain):
    """``|| sum_j P^(s-j)(lam0)/(s-j)! u[j] ||`` for ``s = 0 .. m-1``."""
    lam0 = chain.lambda0
    A = [eval_pencil(P, lam0, r) / math.factorial(r) for r in range(len(chain))]
    out = []
    for s in range(len(chain)):
        v = sum(A[s - j] @ chain.vectors[j] for j in range(s + 1))
        out.append(float(np.linalg.norm(v)))
    return np.array(out)


def chain_from_branch(P, derivs, branch, length=None, tol=1e-6):
    """Root chain ``(u, u', u''/2!, ...)`` built from one eigenvector branch.

    ``derivs`` is the :class:`BranchDerivatives` of the characteristic value
    and ``branch`` the local index of a vanishing branch; the chain length
    defaults to the branch's vanishing order.
    """
    if length is None:
        length = derivs.vanishing_order(branch)
        if length is None:
            raise NumericalFailure("vanishing order not resolved by the derivative data")
    if length > derivs.max_order + 1:
        raise ValueError("derivative data too short for the requested chain")
    u = derivs.u[branch]
    vecs = tuple(u[j] / math.factorial(j) for j in range(length))
    nrm = np.linalg.norm(vecs[0])
    vecs = tuple(v / nrm for v in vecs)
    chain = RootChain(derivs.lambda0, vecs, "branch_derivatives")
    res = chain_residuals(P, chain)
    scale = 1.0 + P.scale
    if np.any(res > tol * scale):
        raise NumericalFailure(
            f"chain residuals {res} exceed {tol * scale:.2e}; derivatives unreliable")
    return chain


def gram_matrix_linear(K, chain):
    """Gram matrix of ``(x, -K y)`` on a chain of the pencil ``L - lam K``."""
    U = np.column_stack(chain.vectors)
    W = -(U.conj().T @ K @ U)
    return 0.5 * (W + W.conj().T)


def gram_matrix_quadratic(L, chain, tol=None):
    """Gram matrix and signature of a root chain of ``M + lam L + lam^2 I``.

    Entries are ``(u[i], L u[j]) + (u[i-1], u[j]) + (u[i], u[j-1])`` with
    ``u[-1] = 0``.  For a chain of length 3 the signature is
    ``-sign det W``; for other lengths it is the inertia difference
    ``p(W) - n(W)``.
    """
    L = np.asarray(L)
    u = list(chain.vectors)
    m = len(u)
    if m < 1:
        raise ValueError("empty chain")
    zero = np.zeros_like(u[0])

    def vec(i):
        return u[i] if i >= 0 else zero

    W = np.zeros((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            W[i, j] = (np.vdot(vec(i), L @ vec(j)) + np.vdot(vec(i - 1), vec(j))
                       + np.vdot(vec(i), vec(j - 1)))
    W = 0.5 * (W + W.conj().T)
    thr = 1e-8 * (1.0 + float(np.max(np.abs(L)))) if tol is None else tol
    if m == 3:
        det = float(np.linalg.det(W).real)
        if abs(det) < thr:
            raise NumericalFailure(f"det W = {det:.3e} below {thr:.1e}; signature indeterminate")
        return W, -int(np.sign(det))
    pos, neg, zer = inertia(W, thr)
    if zer:
        raise NumericalFailure("Gram matrix singular; signature indeterminate")
    return W, pos - neg


def compositions(m):
    """All ordered tuples of positive integers summing to ``m``."""
    for cuts in itertools.product((0, 1), repeat=m - 1):
        parts, run = [], 1
        for c in cuts:
            if c:
                parts.append(run)
                run = 1
            else:
                run += 1
        parts.append(run)
        yield tuple(parts)


def lambda_operators(A, Ltil, m_max):
    """``Lambda_1 .. Lambda_m_max`` by explicit sums over compositions.

    ``A[r]`` is ``P^(r)(lam0) / r!`` and ``Ltil`` the regularized inverse.
    Each composition ``(a_1, ..., a_s)`` contributes the alternating product
    ``A[a_1] Ltil A[a_2] Ltil ... Ltil A[a_s]``.
    """
    out = {}
    for m in range(1, m_max + 1):
        acc = np.zeros_like(Ltil)
        for alpha in compositions(m):
            term = A[alpha[0]]
            for a in alpha[1:]:
                term = term @ Ltil @ A[a]
            acc = acc + term
        out[m] = acc
    return out


@dataclass(frozen=True, eq=False)
class KernelRecursionState:
    """Result of the kernel recursion at one characteristic value.

    ``Kcounts[m-1] = (|K_m^+|, |K_m^-|, |K_m^0|)``; ``U_list[m]`` spans the
    kernel directions that survive order ``m``; ``H_forms[m-1]`` is the
    Hermitian form restricted to ``U_list[m-1]``.
    """

    lambda0: float
    U_list: tuple
    H_forms: tuple
    Kcounts: tuple
    Pi: np.ndarray
    Ltilde_inv: np.ndarray
    Lambdas: dict
    derivs: BranchDerivatives | None
    notes: tuple = ()

    @property
    def geo_mult(self):
        return self.U_list[0].shape[1]

    @property
    def alg_mult(self):
        return sum(m * (kp + km) for m, (kp, km, _) in enumerate(self.Kcounts, start=1))

    def form_eigenvalues(self, m):
        """Eigenvalues of the order-``m`` form, times ``m!``."""
        H = self.H_forms[m - 1]
        return np.linalg.eigvalsh(H) * math.factorial(m)


def _kernel_basis(M, tol):
    u, s, _ = np.linalg.svd(M)
    return u[:, s <= tol]


def kernel_recursion(P, cv, branch_data=None, tol=None, family=None, max_depth=None):
    """Run the nested-kernel recursion at ``cv.lambda0``.

    ``branch_data`` supplies the kernel components of the branch
    derivatives, needed from order 3 on; it is computed on demand from
    ``family`` when absent or too short.
    """
    lam0 = cv.lambda0
    tol = tau_zero(P) if tol is None else tol
    L0 = eval_pencil(P, lam0)
    U0 = _kernel_basis(L0, tol)
    k = U0.shape[1]
    if k == 0:
        raise NumericalFailure(f"no kernel at {lam0!r}")
    Pi = U0 @ U0.conj().T
    Ltil = -np.linalg.inv(L0 + Pi)
    if max_depth is None:
        max_depth = P.n * (P.p + P.q) + 2
    A = {r: eval_pencil(P, lam0, r) / math.factorial(r) for r in range(0, max_depth + 1)}
    notes = []
    Lambdas = {}
    U_list = [U0]
    H_forms = []
    Kcounts = []
    derivs = branch_data
    m = 0
    U = U0
    while U.shape[1] > 0:
        m += 1
        if m > max_depth:
            raise NumericalFailure(f"kernel recursion exceeded depth {max_depth} at {lam0!r}")
        Lambdas.update(lambda_operators(A, Ltil, m) if m not in Lambdas else {})
        H = U.conj().T @ Lambdas[m] @ U
        if m >= 3:
            if derivs is None or derivs.max_order < m:
                if family is None:
                    raise ValueError("order >= 3 needs branch derivative data or a family")
                derivs = branch_derivatives(P, family, cv, max_order=max(m, k + 2))
            H = H + _d_form(derivs, Lambdas, Pi, U, m)
        H = 0.5 * (H + H.conj().T)
        w, Q = np.linalg.eigh(H)
        amb = (np.abs(w) >= tol / 10) & (np.abs(w) <= 10 * tol)
        if amb.any():
            msg = f"order {m} form eigenvalue {w[amb][0]:.3e} near threshold {tol:.1e} at {lam0!r}"
            notes.append(msg)
            warnings.warn(msg, ToleranceWarning, stacklevel=2)
        pos, neg, zero = int(np.sum(w > tol)), int(np.sum(w < -tol)), int(np.sum(np.abs(w) <= tol))
        H_forms.append(H)
        Kcounts.append((pos, neg, zero))
        U = U @ Q[:, np.abs(w) <= tol]
        U_list.append(U)
    return KernelRecursionState(lam0, tuple(U_list), tuple(H_forms), tuple(Kcounts),
                                Pi, Ltil, Lambdas, derivs, tuple(notes))


def _d_form(derivs, Lambdas, Pi, U, m):
    """Correction form on ``span U`` built from kernel parts of branch derivatives.

    In branch coordinates it reads
    ``-sum_{s>=1, r>=1, r+s<=m-1} C_r^* Lambda_{m-s-r} C_s`` with
    ``C_s = Pi u^(s) / s!`` collected over the vanishing branches.
    """
    B = derivs.u[:, 0, :].T  # n x k, orthonormal kernel basis of branch vectors
    coords = B.conj().T @ U
    C = {s: Pi @ (derivs.u[:, s, :].T / math.factorial(s)) for s in range(1, m - 1)}
    Dk = np.zeros((B.shape[1], B.shape[1]), dtype=complex)
    for s in range(1, m - 1):
        for r in range(1, m - s):
            if m - s - r < 1:
                continue
            Dk -= C[r].conj().T @ Lambdas[m - s - r] @ C[s]
    return coords.conj().T @ Dk @ coords


def krein_signature_of_cv(state):
    """``(kappa+, kappa-, kappa)`` summed over the branches counted by ``state``."""
    kp = km = 0
    for m, (pos, neg, _) in enumerate(state.Kcounts, start=1):
        a, b = graphical_krein(m, 1)
        kp += pos * a
        km += pos * b
        a, b = graphical_krein(m, -1)
        kp += neg * a
        km += neg * b
    return kp, km, kp - km
