"""Counts of eigencurves near characteristic values and at infinity.

``Z_down`` counts branches that are negative on one side of a point and
``Z_up`` those that are positive.  The global identities tie these counts
to the Krein signatures of all real characteristic values; every residual
here is an exact integer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .branches import (CharacteristicValue, _disc_power_sums, find_characteristic_values,
                       negative_count, tau_cluster, tau_zero, track_branches)
from .krein import kernel_recursion, krein_signature_of_cv
from .pencil_model import (GridSpec, InvalidProblemError, InvariantBreach,
                           NumericalFailure, PolyPencil, eval_pencil,
                           problem_to_dict)

__all__ = [
    "TAU_CLASS",
    "IndexReport",
    "RootCluster",
    "companion_oracle",
    "compute_K_infinity",
    "effective_degrees",
    "z_table",
    "z_at_infinity",
    "z_formula",
    "z_local",
    "verify_global",
    "verify_local",
    "kernel_identities",
    "quadratic_counts",
    "has_reflection_symmetry",
    "match_oracle",
    "multiple_roots",
    "analyze",
]

TAU_CLASS = 1e-7


def tau_class(lam):
    return TAU_CLASS * (1.0 + abs(lam))


# -- companion oracle -----------------------------------------------------

@dataclass(frozen=True)
class RootCluster:
    value: complex
    multiplicity: int
    spread: float
    members: tuple = ()

    @property
    def is_real(self):
        return abs(self.value.imag) <= tau_class(self.value.real)


def _linearization(A):
    """Block companion pair ``(C0, C1)`` with ``det(C0 + lam C1) ~ det P(lam)``."""
    d = A.shape[0] - 1
    n = A.shape[1]
    N = n * d
    C0 = np.zeros((N, N), dtype=complex)
    C1 = np.eye(N, dtype=complex)
    C1[-n:, -n:] = A[d]
    for k in range(d):
        C0[-n:, k * n:(k + 1) * n] = A[k]
    for k in range(d - 1):
        C0[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = -np.eye(n)
    return C0, C1


def companion_oracle(P, cluster_tol=None):
    """All finite characteristic values of ``P`` with multiplicities.

    Eigenvalues of the block companion linearization are computed with the
    QZ algorithm, so a singular leading coefficient only adds infinite
    eigenvalues, which are dropped.  Roots within ``cluster_tol`` (default
    ``tau_cluster``) are merged; :func:`multiple_roots` merges by the
    expected round-off scatter instead.
    """
    return _cluster(_companion_roots(P), cluster_tol)


def _companion_roots(P):
    """Finite QZ eigenvalues of the companion pair, unclustered."""
    A = P.combined
    C0, C1 = _linearization(A)
    alpha, beta = scipy.linalg.eigvals(-C0, C1, homogeneous_eigvals=True)
    big = max(1.0, float(np.max(np.abs(A))))
    if np.any((np.abs(alpha) <= 1e-13 * big) & (np.abs(beta) <= 1e-13 * big)):
        raise NumericalFailure("det P(lam) vanishes identically (singular pencil)")
    finite = np.abs(beta) > 1e-11 * np.abs(alpha)
    return alpha[finite] / beta[finite]


def _cluster(roots, cluster_tol=None, link=None):
    roots = np.asarray(roots, dtype=complex)
    m = roots.size
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    if link is None:
        def link(a, b):
            tol = tau_cluster(abs(a)) if cluster_tol is None else cluster_tol
            return abs(a - b) <= tol

    for i in range(m):
        for j in range(i + 1, m):
            if link(roots[i], roots[j]):
                parent[find(i)] = find(j)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(roots[i])
    out = []
    for g in groups.values():
        g = np.array(g)
        c = complex(np.mean(g))
        out.append(RootCluster(c, int(g.size), float(np.max(np.abs(g - c))), tuple(g)))
    out.sort(key=lambda r: (r.value.real, r.value.imag))
    return out


NEAR_REAL = 1e-4
SCATTER_FACTOR = 100.0


def multiple_roots(P):
    """Finite companion roots merged into multiple roots, as ``(value, multiplicity)``.

    Roots within ``1e-3 (1 + |z|)`` are linked; a linked group of size
    ``m`` is one ``m``-fold root at its mean when its spread is at most
    ``SCATTER_FACTOR (eps (1 + scale))**(1/m) (1 + |mean|)``, the
    round-off scatter of such a root.  Other groups fall back to single
    roots.
    """
    roots = _companion_roots(P)
    groups = _cluster(roots, link=lambda a, b: abs(a - b) <= 1e-3 * (1 + abs(a)))
    eps = np.finfo(float).eps * (1.0 + P.scale)
    out = []
    for g in groups:
        m = g.multiplicity
        if m == 1 or g.spread <= SCATTER_FACTOR * eps ** (1.0 / m) * (1.0 + abs(g.value)):
            out.append((g.value, m))
        else:
            out.extend((complex(z), 1) for z in g.members)
    return out


def match_oracle(P, cvs, tol=1e-8, K=None):
    """Pair the finite companion roots with the characteristic values.

    A value of algebraic multiplicity ``m`` claims its ``m`` nearest roots.
    Round-off scatters an ``m``-fold root over a radius ``eps**(1/m)`` but
    leaves the mean of the cluster accurate, so the mean must lie within
    ``tol`` (relative for ``|lam| > 1``) and the cluster must be isolated:
    the next root at least twice as far as the farthest claimed one.
    Unclaimed roots within ``NEAR_REAL (1 + |z|)`` of the real axis count
    as real values the scan missed, except beyond ``K`` when given, where
    only rounding images of infinite eigenvalues can lie.  Returns
    ``(ok, max_distance,
    details)`` with ``details`` rows ``(lam0, oracle_mean, alg_mult,
    oracle_mult)``.
    """
    roots = _companion_roots(P)
    free = np.ones(roots.size, dtype=bool)
    ok = True
    worst = 0.0
    details = []
    for cv in sorted(cvs, key=lambda c: c.alg_mult, reverse=True):
        m = cv.alg_mult
        idx = np.flatnonzero(free)
        d = np.abs(roots[idx] - cv.lambda0)
        order = np.argsort(d)
        if idx.size < m:
            ok = False
            details.append((cv.lambda0, None, m, int(idx.size)))
            continue
        take = idx[order[:m]]
        mean = complex(np.mean(roots[take]))
        dm = d[order[m - 1]]
        nxt = d[order[m]] if idx.size > m else np.inf
        scale = max(1.0, abs(cv.lambda0))
        dist = abs(mean.real - cv.lambda0)
        worst = max(worst, dist / scale)
        isolated = nxt > 2.0 * dm and dm <= 1e-2 * scale
        mult = m if isolated else int(np.sum(d <= max(dm, tau_cluster(cv.lambda0))))
        good = dist <= tol * scale and abs(mean.imag) <= tol * scale and isolated
        ok &= bool(good)
        free[take] = False
        details.append((cv.lambda0, mean.real, m, mult))
    left = roots[free]
    missed = left[np.abs(left.imag) <= NEAR_REAL * (1.0 + np.abs(left))]
    if K is not None:
        missed = missed[np.abs(missed) <= K]
    for z in missed:
        ok = False
        details.append((None, float(z.real), None, 1))
    details.sort(key=lambda r: (r[0] if r[0] is not None else r[1]))
    return ok, worst, details


# -- behaviour at infinity ------------------------------------------------

def effective_degrees(P):
    """``(p, q)`` with trailing zero coefficients dropped; ``q = -1`` if ``g = 0``."""
    p = max((k for k, m in enumerate(P.coeffs) if np.any(m != 0)), default=0)
    q = max((k for k, g in enumerate(P.g_coeffs) if g != 0), default=-1)
    return p, q


def compute_K_infinity(P, max_doublings=10):
    """Radius beyond which ``P`` has no real characteristic value.

    With an invertible leading coefficient the infinity-norm of the monic
    companion matrix bounds every root; otherwise the largest finite
    oracle root is used.  The bound is checked by a scan of negative
    counts out to ``8 K`` and doubled until the scan is flat.
    """
    A = P.combined
    d = A.shape[0] - 1
    n = P.n
    lead = A[d]
    if np.linalg.cond(lead) < 1e10:
        inv = np.linalg.inv(lead)
        rows = sum(np.abs(inv @ A[k]).sum(axis=1) for k in range(d))
        B = max(1.0, float(np.max(rows)))
    else:
        B = _plateau_radius(P)
    K = 2.0 * (1.0 + B)
    for _ in range(max_doublings + 1):
        if _flat_beyond(P, K):
            return K
        K *= 2.0
    raise NumericalFailure(f"negative counts still change beyond K = {K:.3e}")


def _plateau_radius(P, steps=25):
    """Radius enclosing every finite root when the leading coefficient is singular.

    Rounding turns infinite eigenvalues of the linearization into huge
    spurious finite ones, so the roots themselves give no usable bound.
    The contour count of roots in ``|lam| < R`` stays exact well below that
    scale.  ``R`` runs through half decades until the contour integral stops
    being reliable; the smallest radius already holding the final count is
    returned.
    """
    counts = []
    misses = 0
    for j in range(steps):
        R = 10.0 ** (j / 2)
        ps = _disc_power_sums(P, 0.0, R, 0, agree=1e-3)
        if ps is None or abs(ps[0] - round(ps[0].real)) > 1e-3:
            # one bad circle may just pass near a root; two in a row end the search
            misses += 1
            if counts and misses >= 2:
                break
            continue
        misses = 0
        counts.append((R, int(round(ps[0].real))))
    if not counts:
        raise NumericalFailure("contour root counts of det P unreliable; cannot bound the roots")
    final = counts[-1][1]
    return next(R for R, c in counts if c == final)


def _flat_beyond(P, K):
    fac = np.array([1.0, 1.5, 2.0, 3.0, 5.0, 8.0])
    for s in (-1.0, 1.0):
        counts = {negative_count(P, s * K * f, tol=0.0) for f in fac}
        if len(counts) != 1:
            return False
        w = np.linalg.eigvalsh(eval_pencil(P, s * K))
        if np.min(np.abs(w)) <= tau_zero(P):
            return False
    return True


def z_table(P):
    """``(Z_down(-inf), Z_down(+inf))`` read off from the leading coefficients."""
    p, q = effective_degrees(P)
    n = P.n
    if q > p:
        gq = P.g_coeffs[q]
        if q % 2 == 0:
            return (n, n) if gq > 0 else (0, 0)
        return (0, n) if gq > 0 else (n, 0)
    lead = P.coeffs[p] - (P.g_coeffs[p] if q == p else 0.0) * np.eye(n)
    w = np.linalg.eigvalsh(lead)
    if np.min(np.abs(w)) <= tau_zero(P):
        raise InvalidProblemError(
            "leading matrix coefficient is singular; the asymptotic table does not apply")
    neg = int(np.sum(w < 0))
    pos = n - neg
    return (neg if p % 2 == 0 else pos), neg


def z_at_infinity(P, K=None, check=True):
    """Negative branch counts beyond ``-K`` and ``+K``.

    The direct counts ``n(P(-K))`` and ``n(P(K))`` are authoritative; when
    the asymptotic table applies, it must agree with them.
    """
    K = compute_K_infinity(P) if K is None else K
    direct = (negative_count(P, -K, tol=0.0), negative_count(P, K, tol=0.0))
    if check:
        try:
            table = z_table(P)
        except InvalidProblemError:
            return direct
        if table != direct:
            raise InvariantBreach(f"asymptotic table {table} disagrees with counts {direct} at K={K}")
    return direct


# -- local counts ---------------------------------------------------------

def z_formula(Kcounts):
    """``(Zdown_left, Zdown_right, Zup_left, Zup_right)`` from K-counts.

    ``Kcounts[m-1] = (|K_m^+|, |K_m^-|, ...)``.  A branch of odd order
    changes sign at the point; one of even order keeps it.
    """
    dl = dr = ul = ur = 0
    for m, row in enumerate(Kcounts, start=1):
        kp, km = row[0], row[1]
        dr += km
        ur += kp
        if m % 2:
            dl += kp
            ul += km
        else:
            dl += km
            ul += kp
    return dl, dr, ul, ur


def z_local(P, cv, Kcounts, left=None, right=None):
    """Local counts at ``cv`` from ``Kcounts``, checked against inertia.

    ``left``/``right`` are the neighbouring characteristic values (or
    ``None``); the check samples ``P`` halfway towards them, where no
    eigenvalue other than the vanishing branches can have changed sign.
    """
    Z = z_formula(Kcounts)
    lam0 = cv.lambda0
    reach = 0.1 * (1.0 + abs(lam0))
    dl = reach if left is None else min(reach, 0.5 * (lam0 - left))
    dr = reach if right is None else min(reach, 0.5 * (right - lam0))
    n0 = negative_count(P, lam0)
    direct_l = negative_count(P, lam0 - dl, tol=0.0) - n0
    direct_r = negative_count(P, lam0 + dr, tol=0.0) - n0
    if (direct_l, direct_r) != Z[:2]:
        raise InvariantBreach(
            f"at {lam0!r}: K-count formula gives Zdown {Z[:2]}, inertia gives {(direct_l, direct_r)}")
    geo = sum(r[0] + r[1] for r in Kcounts)
    if Z[0] + Z[2] != geo or Z[1] + Z[3] != geo:
        raise InvariantBreach(f"at {lam0!r}: Z counts {Z} do not add up to dim Ker = {geo}")
    return Z


# -- identities -----------------------------------------------------------

def _cv_at(cvs, lam):
    for cv in cvs:
        if abs(cv.lambda0 - lam) <= tau_cluster(lam):
            return cv
    return None


def verify_global(Z_inf, n_L0, cvs):
    """Residuals of the two global identities as exact integers.

    ``cvs`` carry their Z counts and signatures; the value at zero, if
    present, enters only through its Z counts.
    """
    zero = _cv_at(cvs, 0.0)
    z0m, z0p = (zero.Zdown_left, zero.Zdown_right) if zero is not None else (0, 0)
    others = [cv for cv in cvs if cv is not zero]
    s_sign = sum(int(np.sign(cv.lambda0)) * cv.kappa for cv in others)
    s_all = sum(cv.kappa for cv in others)
    zm, zp = Z_inf
    eq1 = (zm + zp) - 2 * n_L0 - (z0p + z0m) + s_sign
    eq2 = (zm - zp) + (z0p - z0m) - s_all
    return int(eq1), int(eq2), {"sum_sign_kappa": int(s_sign), "sum_kappa": int(s_all),
                                "Zdown_0": [int(z0m), int(z0p)]}


def kernel_identities(cv):
    """Residuals of the identities tying Z counts, signature and kernel size at ``cv``.

    Returns ``(Zl - Zr - kappa, Zl + Zr - kappa - 2 Zr, Zl + Zl_up - k,
    Zr + Zr_up - k)`` with ``Zl, Zr`` the down counts and ``k`` the number
    of vanishing branches found by the scan.
    """
    k = cv.geo_mult
    r0 = (cv.Zdown_left - cv.Zdown_right) - cv.kappa
    r1 = (cv.Zdown_left + cv.Zdown_right) - (cv.kappa + 2 * cv.Zdown_right)
    r2 = cv.Zdown_left + cv.Zup_left - k
    r3 = cv.Zdown_right + cv.Zup_right - k
    return int(r0), int(r1), int(r2), int(r3)


def verify_local(P, lambda1, lambda2, cvs):
    """Residual of the interval identity on ``[lambda1, lambda2]``."""
    if not lambda1 < lambda2:
        raise ValueError("need lambda1 < lambda2")
    c1, c2 = _cv_at(cvs, lambda1), _cv_at(cvs, lambda2)
    z1 = c1.Zdown_right if c1 is not None else 0
    z2 = c2.Zdown_left if c2 is not None else 0
    lam1 = c1.lambda0 if c1 is not None else lambda1
    lam2 = c2.lambda0 if c2 is not None else lambda2
    inside = sum(cv.kappa for cv in cvs if lam1 < cv.lambda0 < lam2
                 and cv is not c1 and cv is not c2)
    lhs = negative_count(P, lam1) - negative_count(P, lam2) + z1 - z2
    return int(lhs - inside)


# -- quadratic pencils ----------------------------------------------------

def _quadratic_parts(P):
    A = P.combined
    if A.shape[0] != 3 or not np.allclose(A[2], np.eye(P.n), atol=1e-14, rtol=0):
        raise InvalidProblemError("not of the form M + lam K + lam^2 I")
    return A[0], A[1]


def has_reflection_symmetry(P, samples=7, seed=0, tol=None):
    """Whether ``P(lam)`` and ``P(-lam)`` share their spectrum for all ``lam``.

    Both are polynomial in ``lam``, so agreement at a few generic points
    decides the question up to round-off.
    """
    rng = np.random.default_rng(seed)
    tol = 1e-9 * (1.0 + P.scale) if tol is None else tol
    for lam in rng.uniform(-2.0, 2.0, samples):
        a = np.linalg.eigvalsh(eval_pencil(P, lam))
        b = np.linalg.eigvalsh(eval_pencil(P, -lam))
        if np.max(np.abs(a - b)) > tol * (1.0 + abs(lam)) ** 2:
            return False
    return True


def quadratic_counts(P, cvs):
    """Counts and identities for pencils ``M + lam K + lam^2 I``.

    ``cvs`` must carry signatures.  Returns a dict with the companion
    counts ``n_r, n_i, n_c, z``, the signature sums ``n_r_plus/minus`` and
    integer residuals; the symmetric-case residuals are ``None`` when the
    reflection symmetry is absent.
    """
    M, _ = _quadratic_parts(P)
    n = P.n
    z = n_r = n_i = n_c = 0
    for v, m in multiple_roots(P):
        tc = tau_class(abs(v))
        if abs(v) <= tc:
            z += m
        elif abs(v.imag) <= tc:
            n_r += m
        elif abs(v.real) <= tc:
            n_i += m
        elif v.imag > 0:
            n_c += m
    zero = _cv_at(cvs, 0.0)
    z0m, z0p = (zero.Zdown_left, zero.Zdown_right) if zero is not None else (0, 0)
    others = [cv for cv in cvs if cv is not zero]
    branch_nr = sum(cv.alg_mult for cv in others)
    pos_minus = 2 * sum(cv.kappa_minus for cv in others if cv.lambda0 > 0)
    pos_plus = 2 * sum(cv.kappa_plus for cv in others if cv.lambda0 > 0)
    neg_plus = 2 * sum(cv.kappa_plus for cv in others if cv.lambda0 < 0)
    nM = negative_count(P, 0.0)
    out = {
        "n_r": n_r, "n_i": n_i, "n_c": n_c, "z": z,
        "n_r_branch": branch_nr,
        "n_r_minus": pos_minus, "n_r_plus": pos_plus,
        "n_M": nM,
        "residual_nsum": 2 * n - (z + n_r + 2 * n_c + n_i),
        # the form that follows from splitting n_r by the sign of lam
        "residual_LM5": 2 * nM + (z0p + z0m) - (n_r - pos_minus - neg_plus),
        "symmetric": False,
        "residual_indexLM2": None,
        "residual_indexLM3": None,
    }
    if has_reflection_symmetry(P):
        out["symmetric"] = True
        if z % 2 or n_i % 2:
            raise InvariantBreach(f"symmetric pencil with odd z={z} or n_i={n_i}")
        a = (n - z // 2)
        b = nM + z0p
        rhs = n_c + n_i // 2
        out["residual_indexLM2"] = (a - b) - (rhs + pos_minus)
        out["residual_indexLM3"] = (a + b) - (rhs + pos_plus)
    return out


# -- full analysis --------------------------------------------------------

@dataclass
class IndexReport:
    pencil: PolyPencil
    K: float
    Z_inf: tuple
    Z_table: tuple | None
    n_L0: int
    cvs: list
    sums: dict
    eq1_residual: int
    eq2_residual: int
    kernel_residuals: list
    local_checks: list = field(default_factory=list)
    quadratic: dict | None = None
    oracle: dict | None = None
    notes: list = field(default_factory=list)

    @property
    def residuals(self):
        """Every integer residual in the report."""
        out = [self.eq1_residual, self.eq2_residual]
        out += [r for pair in self.kernel_residuals for r in pair]
        out += [c[2] for c in self.local_checks]
        if self.quadratic:
            out += [self.quadratic[k] for k in
                    ("residual_nsum", "residual_LM5", "residual_indexLM2", "residual_indexLM3")
                    if self.quadratic[k] is not None]
        return out

    def ok(self):
        return all(r == 0 for r in self.residuals)

    def to_dict(self):
        cvs = []
        for cv in self.cvs:
            cvs.append({
                "lambda0": cv.lambda0,
                "geo_mult": cv.geo_mult,
                "alg_mult": cv.alg_mult,
                "Kcounts": [[int(a), int(b)] for a, b, *_ in cv.Kcounts],
                "kappa": [cv.kappa_plus, cv.kappa_minus],
                "Z": [cv.Zdown_left, cv.Zdown_right, cv.Zup_left, cv.Zup_right],
            })
        d = {
            "pencil": problem_to_dict(self.pencil),
            "K": self.K,
            "Z_inf": list(self.Z_inf),
            "Z_table": list(self.Z_table) if self.Z_table is not None else None,
            "n_L0": self.n_L0,
            "cvs": cvs,
            "sums": dict(self.sums),
            "eq1_residual": self.eq1_residual,
            "eq2_residual": self.eq2_residual,
            "kernel_residuals": [list(p) for p in self.kernel_residuals],
            "local_checks": [{"lambda1": a, "lambda2": b, "residual_eq4": r}
                             for a, b, r in self.local_checks],
            "notes": list(self.notes),
        }
        if self.quadratic is not None:
            d["quadratic"] = dict(self.quadratic)
        if self.oracle is not None:
            d["oracle"] = dict(self.oracle)
        return d


def count_characteristic_value(P, cv, family, left=None, right=None):
    """Run the recursion at ``cv`` and attach multiplicities, signatures and Z counts."""
    state = kernel_recursion(P, cv, family=family)
    kp, km, _ = krein_signature_of_cv(state)
    Z = z_local(P, cv, state.Kcounts, left, right)
    return cv.with_counts(Kcounts=state.Kcounts, alg_mult=state.alg_mult,
                          kappa_plus=kp, kappa_minus=km,
                          Zdown_left=Z[0], Zdown_right=Z[1],
                          Zup_left=Z[2], Zup_right=Z[3]), state


def analyze(P, grid=None, local_pairs=(), oracle=True, quadratic=None, seed=0):
    """Complete index analysis of ``P``.

    ``grid`` may widen the scanned range but the scan always covers
    ``[-K, K]``.  ``local_pairs`` lists intervals for the local identity;
    ``quadratic`` forces (True) or suppresses (False) the quadratic counts,
    which by default run whenever the pencil has the matching form.
    """
    K = compute_K_infinity(P)
    samples = 401
    lo, hi = -K, K
    if grid is not None:
        samples = grid.samples
        lo, hi = min(lo, grid.lambda_min), max(hi, grid.lambda_max)
    refine = grid.refine_tol if grid is not None else 1e-9
    family = track_branches(P, GridSpec(lo, hi, samples, refine))
    notes = []
    if family.unresolved:
        notes.append(f"{len(family.unresolved)} grid intervals left unresolved")
    found = find_characteristic_values(P, family)
    cvs = []
    states = []
    for i, cv in enumerate(found):
        left = found[i - 1].lambda0 if i > 0 else None
        right = found[i + 1].lambda0 if i + 1 < len(found) else None
        cv2, st = count_characteristic_value(P, cv, family, left, right)
        cvs.append(cv2)
        states.append(st)
        notes.extend(st.notes)
    kernel_res = [kernel_identities(cv) for cv in cvs]
    Z_inf = z_at_infinity(P, K)
    try:
        table = z_table(P)
    except InvalidProblemError as exc:
        table = None
        notes.append(str(exc))
    n_L0 = negative_count(P, 0.0)
    eq1, eq2, sums = verify_global(Z_inf, n_L0, cvs)
    local = [(float(a), float(b), verify_local(P, a, b, cvs)) for a, b in local_pairs]
    quad = None
    is_quad = P.combined.shape[0] == 3 and np.allclose(P.combined[2], np.eye(P.n), atol=1e-14, rtol=0)
    if quadratic or (quadratic is None and is_quad):
        quad = quadratic_counts(P, cvs)
    orc = None
    if oracle:
        ok, worst, details = match_oracle(P, cvs, K=K)
        orc = {"match": bool(ok), "max_rel_distance": float(worst),
               "pairs": [[a, b, c, d] for a, b, c, d in details]}
        if not ok:
            notes.append("companion oracle disagrees with the branch scan")
    return IndexReport(P, K, Z_inf, table, n_L0, cvs, sums, eq1, eq2, kernel_res,
                       local, quad, orc, notes)
