"""Unstable-eigenvalue counts for linearized Hamiltonian problems ``J L``.

``J L u = nu u`` is equivalent to ``(L - lam K) u = 0`` with ``lam = i nu``
and ``K = (iJ)^{-1}`` Hermitian, so purely imaginary eigenvalues of ``JL``
are the real characteristic values of a linear Hermitian pencil and carry
Krein signatures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .branches import GridSpec, find_characteristic_values, tau_cluster, track_branches
from .index_counts import (_cluster, compute_K_infinity, count_characteristic_value,
                           kernel_identities)
from .pencil_model import HamiltonianProblem, InvalidProblemError, InvariantBreach

__all__ = [
    "MAX_COND_J",
    "JLSpectrum",
    "KernelFormD",
    "Theorem1Result",
    "Theorem2Result",
    "jl_spectrum",
    "generalized_kernel",
    "kernel_form",
    "theorem1_check",
    "theorem2_bound",
]

MAX_COND_J = 1e12


def _tol(H):
    JL = H.J @ H.L
    return 1e-8 * (1.0 + float(np.max(np.abs(JL))))


def _nullspace(A, tol):
    if A.shape[1] == 0:
        return np.zeros((A.shape[1], 0), dtype=complex)
    _, s, Vh = np.linalg.svd(A)
    rank = int(np.sum(s > tol))
    return Vh[rank:].conj().T


def generalized_kernel(H, tol=None):
    """Orthonormal basis of the generalized kernel of ``JL``.

    ``Ker (JL)^{r+1}`` is the null space of ``(I - Q Q*) JL`` when ``Q``
    spans ``Ker (JL)^r``, which avoids forming matrix powers.
    """
    tol = _tol(H) if tol is None else tol
    JL = H.J @ H.L
    N = JL.shape[0]
    Q = np.zeros((N, 0), dtype=complex)
    for _ in range(N):
        Pc = np.eye(N) - Q @ Q.conj().T
        Qn = _nullspace(Pc @ JL, tol)
        if Qn.shape[1] == Q.shape[1]:
            break
        Q = Qn
    return Q


@dataclass(frozen=True, eq=False)
class KernelFormD:
    """Form ``(., L .)`` on the part of the generalized kernel orthogonal to ``Ker L``."""

    V_basis: np.ndarray
    D: np.ndarray
    n_D: int


def kernel_form(H, tol=None):
    tol = _tol(H) if tol is None else tol
    G = generalized_kernel(H, tol)
    KL = _nullspace(H.L, tol)
    R = G - KL @ (KL.conj().T @ G)
    if R.shape[1]:
        u, s, _ = np.linalg.svd(R, full_matrices=False)
        V = u[:, s > 1e-6]
    else:
        V = R
    D = V.conj().T @ H.L @ V
    D = 0.5 * (D + D.conj().T)
    n_D = int(np.sum(np.linalg.eigvalsh(D) < -tol)) if D.size else 0
    return KernelFormD(V, D, n_D)


@dataclass(frozen=True, eq=False)
class JLSpectrum:
    """Classified spectrum of ``JL``.

    ``imaginary`` lists ``(lam, alg_mult, kappa_plus, kappa_minus)`` for
    each real characteristic value ``lam = i nu`` of ``L - lam K``;
    ``kernel_residuals`` holds the kernel identities at every such value,
    zero included.
    """

    eigenvalues: np.ndarray
    k_r: int
    k_c: int
    z: int
    imaginary: tuple
    k_i_minus: int
    reflection_ok: bool
    hamiltonian_symmetry: bool
    notes: tuple = ()
    kernel_residuals: tuple = ()

    @property
    def n_uns(self):
        return self.k_r + 2 * self.k_c


def _multiset_close(a, b, tol):
    """Whether ``a`` and ``b`` agree as multisets up to ``tol`` (greedy pairing)."""
    if a.size != b.size:
        return False
    if a.size == 0:
        return True
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = scipy.optimize.linear_sum_assignment(cost)
    return bool(np.max(cost[rows, cols]) <= tol)


def jl_spectrum(H):
    """Eigenvalues of ``JL`` with the counts ``k_r``, ``k_c`` and ``k_i^-``."""
    if H.condition_J > MAX_COND_J:
        raise InvalidProblemError(f"cond(J) = {H.condition_J:.2e} exceeds {MAX_COND_J:.0e}")
    JL = H.J @ H.L
    nu = np.linalg.eigvals(JL)
    tol = _tol(H)
    # the spread of a defective eigenvalue of size m is about eps**(1/m)
    loose = max(1e-6, np.sqrt(tol)) * (1.0 + float(np.max(np.abs(nu), initial=0.0)))
    reflection_ok = _multiset_close(nu, -nu.conj(), loose)
    full = reflection_ok and _multiset_close(nu, -nu, loose)
    z = generalized_kernel(H, tol).shape[1]
    order = np.argsort(np.abs(nu))
    rest = nu[order[z:]]
    notes = []
    k_r = k_c = n_imag = 0
    for c in _cluster(rest, cluster_tol=loose):
        v, m = c.value, c.multiplicity
        band = max(loose, 2 * c.spread)
        if abs(v.imag) <= band and v.real > 0:
            k_r += m
        elif abs(v.real) <= band:
            n_imag += m
        elif v.real > 0 and v.imag > 0:
            k_c += m
        elif v.real > 0:
            # partner of a first-quadrant value; counted through it
            pass
    # imaginary eigenvalues through the pencil L - lam K
    P = H.pencil()
    imag, k_i_minus, alg_total, kres = [], 0, 0, []
    K = compute_K_infinity(P)
    family = track_branches(P, GridSpec(-K, K, 401))
    found = find_characteristic_values(P, family)
    for i, cv in enumerate(found):
        left = found[i - 1].lambda0 if i > 0 else None
        right = found[i + 1].lambda0 if i + 1 < len(found) else None
        cv2, _ = count_characteristic_value(P, cv, family, left, right)
        kres.append(kernel_identities(cv2))
        if abs(cv2.lambda0) <= tau_cluster(0.0):
            continue  # the kernel of L, i.e. nu = 0
        imag.append((cv2.lambda0, cv2.alg_mult, cv2.kappa_plus, cv2.kappa_minus))
        alg_total += cv2.alg_mult
        if cv2.lambda0 < 0:
            k_i_minus += cv2.kappa_minus
        if cv2.alg_mult == 1:
            _check_simple_sign(H, cv2)
    if alg_total != n_imag:
        notes.append(f"{n_imag} imaginary eigenvalues of JL but {alg_total} real "
                     "characteristic values of the pencil")
    return JLSpectrum(nu, k_r, k_c, z, tuple(imag), k_i_minus, reflection_ok, full,
                      tuple(notes), tuple(kres))


def _check_simple_sign(H, cv):
    """For a simple value the signature is ``sign(-(u, K u))``."""
    K = H.K
    K = 0.5 * (K + K.conj().T)
    M = H.L - cv.lambda0 * K
    _, _, Vh = np.linalg.svd(M)
    u = Vh[-1].conj()
    s = -float(np.real(np.vdot(u, K @ u)))
    kappa = 1 if s > 0 else -1
    if kappa != cv.kappa:
        raise InvariantBreach(f"at lam={cv.lambda0!r}: -(u,Ku) gives {kappa}, branches give {cv.kappa}")


@dataclass(frozen=True)
class Theorem1Result:
    residual: int | None
    lhs: int | None = None
    n_L: int | None = None
    n_D: int | None = None
    k_i_minus: int | None = None
    skipped: str | None = None
    notes: tuple = field(default=())


def theorem1_check(H, spectrum=None):
    """Residual of ``k_r + 2 k_c = n(L) - n(D) - 2 k_i^-``.

    Skipped, with a reason, when the generalized kernel is not exactly
    twice the kernel of ``L`` or the spectrum lacks the full four-fold
    symmetry.
    """
    tol = _tol(H)
    spec = jl_spectrum(H) if spectrum is None else spectrum
    dim_ker = _nullspace(H.L, tol).shape[1]
    if spec.z != 2 * dim_ker:
        return Theorem1Result(None, skipped=f"dim gKer(JL) = {spec.z} != 2 dim Ker L = {2 * dim_ker}")
    if not spec.hamiltonian_symmetry:
        return Theorem1Result(None, skipped="spectrum of JL lacks the symmetry nu -> -nu")
    kf = kernel_form(H, tol)
    n_L = int(np.sum(np.linalg.eigvalsh(H.L) < -tol))
    lhs = spec.n_uns
    res = lhs - (n_L - kf.n_D - 2 * spec.k_i_minus)
    return Theorem1Result(int(res), lhs, n_L, kf.n_D, spec.k_i_minus, notes=spec.notes)


@dataclass(frozen=True)
class Theorem2Result:
    lower_bound: int | None
    k_r: int | None
    holds: bool | None
    n_uns: int | None = None
    skipped: str | None = None


def theorem2_bound(H, spectrum=None):
    """Lower bound ``|n(P L_+ P) - n(P L_- P)|`` on ``k_r`` for canonical problems."""
    if H.canonical_blocks is None:
        raise InvalidProblemError("problem has no canonical block structure")
    Lp, Lm = (np.asarray(b) for b in H.canonical_blocks)
    tol = _tol(H)
    Kp, Km = _nullspace(Lp, tol), _nullspace(Lm, tol)
    if Kp.shape[1] and Km.shape[1] and np.max(np.abs(Kp.conj().T @ Km)) > 1e-8:
        return Theorem2Result(None, None, None, skipped="Ker L_+ and Ker L_- are not orthogonal")
    B = np.hstack([Kp, Km])
    V = scipy.linalg.null_space(B.conj().T) if B.shape[1] else np.eye(Lp.shape[0])
    n_p = int(np.sum(np.linalg.eigvalsh(V.conj().T @ Lp @ V) < -tol)) if V.shape[1] else 0
    n_m = int(np.sum(np.linalg.eigvalsh(V.conj().T @ Lm @ V) < -tol)) if V.shape[1] else 0
    bound = abs(n_p - n_m)
    spec = jl_spectrum(H) if spectrum is None else spectrum
    return Theorem2Result(bound, spec.k_r, spec.k_r >= bound, spec.n_uns)
