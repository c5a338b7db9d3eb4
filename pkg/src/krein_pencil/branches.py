"""Eigenvalue branches of a Hermitian pencil and their characteristic values.

For every real ``lam`` the Hermitian matrix ``P(lam)`` has real eigenvalues
``mu_j(lam)``; following them analytically in ``lam`` gives the eigencurves.
Branches are matched between samples by eigenvector overlap, never by
sorting, so curves that cross keep their identity.
"""

from __future__ import annotations

import contextlib
import csv
import io
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment, minimize_scalar

from .pencil_model import (GridSpec, InvariantBreach, NumericalFailure,
                           eval_pencil, eval_pencil_batch)

__all__ = [
    "TAU_EIG",
    "tau_zero",
    "tau_cluster",
    "solve_hermitian",
    "random_gauge",
    "BranchFamily",
    "CharacteristicValue",
    "BranchDerivatives",
    "track_branches",
    "find_characteristic_values",
    "branch_derivatives",
    "finite_difference_weights",
    "negative_count",
    "curves_csv",
]

TAU_EIG = 1e-10
MATCH_OVERLAP = 0.75
MAX_DEPTH = 20
MAX_SAMPLES = 200_000


def tau_zero(P):
    """Absolute threshold below which a pencil eigenvalue counts as zero."""
    return 1e-8 * (1.0 + P.scale)


def tau_cluster(lam):
    return 1e-6 * (1.0 + abs(lam))


_GAUGE = {"rng": None}


@contextlib.contextmanager
def random_gauge(seed):
    """Multiply every eigenvector returned by :func:`solve_hermitian` by a random phase.

    Results computed inside the block must not depend on the phases.
    """
    old = _GAUGE["rng"]
    _GAUGE["rng"] = np.random.default_rng(seed)
    try:
        yield
    finally:
        _GAUGE["rng"] = old


def solve_hermitian(A):
    """Ascending eigenvalues and orthonormal eigenvectors of Hermitian ``A``.

    Works on stacks of matrices as well.
    """
    try:
        w, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"Hermitian eigensolver did not converge: {exc}") from exc
    rng = _GAUGE["rng"]
    if rng is not None:
        shape = V.shape[:-2] + (1, V.shape[-1])
        V = V * np.exp(2j * np.pi * rng.random(shape))
    return w, V


def negative_count(P, lam, tol=None):
    """``n(P(lam))``, eigenvalues below ``-tol`` (default ``tau_zero``)."""
    tol = tau_zero(P) if tol is None else tol
    w = np.linalg.eigvalsh(eval_pencil(P, lam))
    return int(np.sum(w < -tol))


def _overlaps(Va, Vb):
    """``|<a_j, b_i>|^2`` with rows indexed by columns of ``Va``."""
    return np.abs(np.swapaxes(Va.conj(), -1, -2) @ Vb) ** 2


def _match(O):
    """Permutation sending row ``j`` to its best column, and the weakest overlap."""
    n = O.shape[0]
    perm = np.argmax(O, axis=1)
    best = O[np.arange(n), perm]
    if len(set(perm.tolist())) != n or best.min() < MATCH_OVERLAP:
        rows, perm = linear_sum_assignment(-O)
        best = O[rows, perm]
    return perm, float(best.min())


def _match_batch(Va, Vb):
    O = _overlaps(Va, Vb)
    perms = np.argmax(O, axis=2)
    m, n = perms.shape
    best = np.take_along_axis(O, perms[..., None], axis=2)[..., 0]
    ok = (np.sort(perms, axis=1) == np.arange(n)).all(axis=1) & (best.min(axis=1) >= MATCH_OVERLAP)
    mins = best.min(axis=1)
    for i in np.flatnonzero(~ok):
        perms[i], mins[i] = _match(O[i])
    return perms, mins


def _slopes(P, lams, V):
    """Hellmann-Feynman derivatives ``(u, P'(lam) u)`` of every eigenpair."""
    D = eval_pencil_batch(P, lams, 1)
    return np.real(np.einsum("kij,kil,klj->kj", V.conj(), D, V))


@dataclass(frozen=True, eq=False)
class BranchFamily:
    """Eigenpairs on an ascending grid, columns matched along analytic branches.

    ``values[k, j]`` is ``mu_j(grid[k])``; ``vectors[k, :, j]`` its unit
    eigenvector, phase-aligned so consecutive samples have real positive
    overlap; ``slopes[k, j]`` is ``mu_j'(grid[k])``.
    """

    grid: np.ndarray
    values: np.ndarray
    vectors: np.ndarray
    slopes: np.ndarray
    unresolved: tuple = ()

    @property
    def n(self):
        return self.values.shape[1]

    def branch(self, j):
        return self.values[:, j], self.vectors[:, :, j]

    def nearest(self, lam):
        return int(np.argmin(np.abs(self.grid - lam)))

    def track_to(self, P, lam, steps=8):
        """Branch-labelled eigenpairs at ``lam``, tracked from the nearest sample."""
        k = self.nearest(lam)
        V = self.vectors[k]
        w = self.values[k]
        for x in np.linspace(self.grid[k], lam, steps + 1)[1:]:
            wx, Vx = solve_hermitian(eval_pencil(P, x))
            perm, _ = _match(_overlaps(V, Vx))
            w, V = wx[perm], Vx[:, perm]
        return w, V


@dataclass(frozen=True)
class CharacteristicValue:
    """A real characteristic value and, once computed, its local counts."""

    lambda0: float
    geo_mult: int
    branch_ids: tuple
    Kcounts: tuple = ()
    alg_mult: int | None = None
    kappa_plus: int | None = None
    kappa_minus: int | None = None
    Zdown_left: int | None = None
    Zdown_right: int | None = None
    Zup_left: int | None = None
    Zup_right: int | None = None

    @property
    def kappa(self):
        return self.kappa_plus - self.kappa_minus

    def with_counts(self, **kw):
        return replace(self, **kw)


# -- tracking ------------------------------------------------------------

def _hermite(fa, fb, sa, sb, h, s):
    """Cubic Hermite interpolant on ``[0, 1]`` and its ``s``-derivative."""
    s = s[:, None, None]
    h00 = 2 * s**3 - 3 * s**2 + 1
    h10 = s**3 - 2 * s**2 + s
    h01 = -2 * s**3 + 3 * s**2
    h11 = s**3 - s**2
    d00 = 6 * s**2 - 6 * s
    d10 = 3 * s**2 - 4 * s + 1
    d01 = -6 * s**2 + 6 * s
    d11 = 3 * s**2 - 2 * s
    hh = h[None, :, None]
    H = h00 * fa + h10 * hh * sa + h01 * fb + h11 * hh * sb
    dH = d00 * fa + d10 * hh * sa + d01 * fb + d11 * hh * sb
    return H, dH


_S = np.linspace(0.0, 1.0, 33)


def _hermite_min_abs(fa, fb, sa, sb, h):
    """Exact ``min |H|`` over ``[0, 1]`` of the cubic Hermite interpolant."""
    hh = h[:, None]
    c = hh * sa
    b = -3 * fa - 2 * hh * sa + 3 * fb - hh * sb
    a = 2 * fa + hh * sa - 2 * fb + hh * sb
    lo, hi = np.minimum(fa, fb), np.maximum(fa, fb)
    best = np.minimum(np.abs(fa), np.abs(fb))
    # critical points: 3 a s^2 + 2 b s + c = 0
    disc = b * b - 3 * a * c
    sq = np.sqrt(np.maximum(disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        lin = -c / (2 * b)
        cands = [np.where(a != 0, (-b + sq) / (3 * a), lin),
                 np.where(a != 0, (-b - sq) / (3 * a), lin)]
    for t in cands:
        good = (disc >= 0) & np.isfinite(t) & (t > 0) & (t < 1)
        t = np.where(good, t, 0.0)
        val = ((a * t + b) * t + c) * t + fa
        best = np.where(good, np.minimum(best, np.abs(val)), best)
        lo = np.where(good, np.minimum(lo, val), lo)
        hi = np.where(good, np.maximum(hi, val), hi)
    # the extremes straddle zero: the cubic has a root in the interval
    return np.where((lo <= 0) & (hi >= 0), 0.0, best)


def _needs_split(la, lb, Wa, Wb, Va, Vb, Sa, Sb, Wm, Vm, ztol, gap_tol, min_width):
    """Mask of intervals ``[la, lb]`` that must be bisected (midpoint data given)."""
    h = lb - la
    pab, _ = _match_batch(Va, Vb)
    pam, oam = _match_batch(Va, Vm)
    pmb, omb = _match_batch(Vm, Vb)
    consistent = (np.take_along_axis(pmb, pam, axis=1) == pab).all(axis=1)
    if Wa.shape[1] > 1:
        small_gap = np.minimum(np.diff(Wa, axis=1).min(axis=1),
                               np.diff(Wb, axis=1).min(axis=1)) < gap_tol
    else:
        small_gap = np.zeros(len(h), dtype=bool)

    fa, sa = Wa, Sa
    fb = np.take_along_axis(Wb, pab, axis=1)
    sb = np.take_along_axis(Sb, pab, axis=1)
    fm = np.take_along_axis(Wm, pam, axis=1)
    H, dH = _hermite(fa, fb, sa, sb, h, _S)
    err = np.abs(fm - H[len(_S) // 2])
    Hmin = np.minimum(np.abs(H).min(axis=0), np.abs(fm))
    dmin = np.abs(dH).min(axis=0)
    mono = (np.sign(dH) == np.sign(dH[0])).all(axis=0) & (dmin > 0)
    za, zb = np.abs(fa) <= ztol, np.abs(fb) <= ztol
    same_sign = ((np.sign(H) == np.sign(fa)).all(axis=0) & (np.sign(fm) == np.sign(fa))
                 & (np.sign(fb) == np.sign(fa)))
    no_root = same_sign & ~za & ~zb & (Hmin > 2 * err + ztol)
    one_root = (fa * fb < 0) & ~za & ~zb & mono & (err <= 0.1 * dmin)
    edge_root = (za | zb) & mono & (err <= 0.1 * dmin)
    resolved = (no_root | one_root | edge_root).all(axis=1)
    weakest = np.minimum(oam, omb)
    # a near-collision only matters while the eigenvectors are still ambiguous
    ok = resolved & consistent & (weakest >= 0.5) & ~(small_gap & (weakest < 0.9))
    return ~ok & (h > min_width)


def track_branches(P, grid, gap_tol=None):
    """Sample the pencil on ``grid`` and follow its eigencurves.

    The grid is bisected wherever matching is ambiguous, eigenvalues nearly
    collide, or the cubic Hermite model of some branch cannot rule out an
    unseen root; an interval is left alone once its width drops below
    ``grid.refine_tol`` or after ``MAX_DEPTH`` bisections.
    """
    if not isinstance(grid, GridSpec):
        grid = GridSpec(*grid)
    ztol = tau_zero(P)
    gap_tol = 1e-6 * (1.0 + P.scale) if gap_tol is None else gap_tol
    lam = np.linspace(grid.lambda_min, grid.lambda_max, grid.samples)
    min_width = max(grid.refine_tol, (lam[1] - lam[0]) / 2**MAX_DEPTH)
    W, V = solve_hermitian(eval_pencil_batch(P, lam))
    S = _slopes(P, lam, V)
    pending = np.ones(len(lam) - 1, dtype=bool)
    for _ in range(MAX_DEPTH + 2):
        idx = np.flatnonzero(pending)
        if idx.size == 0:
            break
        mids = 0.5 * (lam[idx] + lam[idx + 1])
        Wm, Vm = solve_hermitian(eval_pencil_batch(P, mids))
        split = _needs_split(lam[idx], lam[idx + 1], W[idx], W[idx + 1],
                             V[idx], V[idx + 1], S[idx], S[idx + 1], Wm, Vm,
                             ztol, gap_tol, min_width)
        if not split.any():
            pending[:] = False
            break
        if len(lam) + split.sum() > MAX_SAMPLES:
            pending[idx[~split]] = False
            break
        new_lam = mids[split]
        lam = np.concatenate([lam, new_lam])
        W = np.concatenate([W, Wm[split]])
        V = np.concatenate([V, Vm[split]])
        S = np.concatenate([S, _slopes(P, new_lam, Vm[split])])
        order = np.argsort(lam, kind="stable")
        lam, W, V, S = lam[order], W[order], V[order], S[order]
        is_new = np.zeros(len(lam), dtype=bool)
        is_new[np.searchsorted(lam, new_lam)] = True
        pending = is_new[1:] | is_new[:-1]
    unresolved = tuple(zip(lam[:-1][pending], lam[1:][pending])) if pending.any() else ()
    W, V, S = _label(W, V, S)
    return BranchFamily(lam, W, V, S, unresolved)


def _label(W, V, S):
    """Permute columns so that index j follows one branch; fix phases."""
    W, V, S = W.copy(), V.copy(), S.copy()
    for k in range(1, len(W)):
        perm, _ = _match(_overlaps(V[k - 1], V[k]))
        W[k], V[k], S[k] = W[k, perm], V[k][:, perm], S[k, perm]
        ph = np.einsum("ij,ij->j", V[k - 1].conj(), V[k])
        mag = np.abs(ph)
        fac = np.where(mag > 0, ph.conj() / np.where(mag > 0, mag, 1), 1.0)
        V[k] = V[k] * fac
    return W, V, S


# -- characteristic values ----------------------------------------------

def _branch_value(P, lam, ua, ub):
    w, V = solve_hermitian(eval_pencil(P, lam))
    score = np.abs(ua.conj() @ V) ** 2 + np.abs(ub.conj() @ V) ** 2
    return w[int(np.argmax(score))]


CLUSTER_LINK = 0.01
# inaccurate candidates this close are rounding scatter of one multiple root;
# the local model separates genuine neighbours again
NOISE_LINK = 1e-2
CONTOUR_NODES = 128
MAX_DISC_ROOTS = 16


def _disc_power_sums(P, centre, r, order, agree=1e-8):
    """Power sums ``sum_i t_i**p``, ``p = 0 .. order``, of the roots of ``det P``
    in the disc ``|lam - centre| < r``, in units ``t = (lam - centre) / r``.

    Trapezoid sums of ``tr(P^-1 P')`` on the circle; ``None`` when a root
    sits so close to the circle that half the nodes disagree.
    """
    t = np.exp(2j * np.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES)
    z = centre + r * t
    A = P.combined
    d = A.shape[0] - 1
    ks = np.arange(d + 1)
    Lz = np.tensordot(z[:, None] ** ks, A, axes=([-1], [0]))
    dLz = np.tensordot(ks[1:] * z[:, None] ** (ks[1:] - 1), A[1:], axes=([-1], [0]))
    try:
        T = np.trace(np.linalg.solve(Lz, dLz), axis1=1, axis2=2)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(T)):
        return None
    tp = t[None, :] ** (np.arange(order + 1)[:, None] + 1)
    full = (T * r * tp).mean(axis=1)
    half = (T[::2] * r * tp[:, ::2]).mean(axis=1)
    if np.max(np.abs(full - half)) > agree * max(1.0, np.max(np.abs(full))):
        return None
    return full


def _roots_from_power_sums(ps):
    """Roots of the monic polynomial with power sums ``ps[1:]`` (Newton's identities)."""
    m = int(round(ps[0].real))
    e = [1.0 + 0j]
    for k in range(1, m + 1):
        e.append(sum((-1) ** (i - 1) * e[k - i] * ps[i] for i in range(1, k + 1)) / k)
    coeffs = [(-1) ** k * e[k] for k in range(m + 1)]
    return np.roots(coeffs) if m else np.zeros(0, dtype=complex)


def _disc_clusters(P, centre, radii):
    """Real root clusters of ``det P`` near ``centre``, nearest first, as
    ``(r, [(estimate, size), ...])`` from the widest admissible disc."""
    scale = max(1.0, abs(centre))
    cap = P.n * (P.combined.shape[0] - 1)
    for rho in radii:
        r = rho * scale
        ps = _disc_power_sums(P, centre, r, 0)
        if ps is None:
            continue
        m = int(round(ps[0].real))
        if abs(ps[0] - m) > 1e-3:
            continue
        if m == 0:
            return r, []
        if m > min(MAX_DISC_ROOTS, cap):
            continue
        ps = _disc_power_sums(P, centre, r, m)
        if ps is None:
            continue
        roots = _roots_from_power_sums(ps)
        groups = [[z] for z in roots]
        merged = True
        while merged:  # single linkage
            merged = False
            for i in range(len(groups)):
                for j in range(i + 1, len(groups)):
                    if min(abs(x - y) for x in groups[i] for y in groups[j]) <= CLUSTER_LINK:
                        groups[i] += groups.pop(j)
                        merged = True
                        break
                if merged:
                    break
        # a real multiple root scatters into a conjugation-symmetric cluster
        out = [(centre + r * float(np.mean(g).real), len(g)) for g in groups
               if abs(np.mean(g).imag) <= CLUSTER_LINK]
        out.sort(key=lambda c: abs(c[0] - centre))
        return r, out
    return None


def polish_roots(P, lam0, k=None, radii=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)):
    """Refine the characteristic values near ``lam0`` by contour integrals of ``det P``.

    Individual roots of ``det P`` scatter like ``eps**(1/m)`` around an
    ``m``-fold root, but the mean of a complete cluster is as stable as the
    contour integral that yields it.  The widest admissible disc about
    ``lam0`` separates the clusters; the nearest one is then re-measured in
    the widest disc about itself that holds it alone.  ``k`` is accepted for
    interface compatibility and unused.  Returns ``[(estimate, size), ...]``
    nearest first, or ``[(lam0, None)]`` when no disc is admissible.
    """
    first = _disc_clusters(P, lam0, radii)
    if first is None or not first[1]:
        return [(lam0, None)]
    x, size = first[1][0]
    scale = max(1.0, abs(x))
    for rho in radii:
        r = rho * scale
        ps = _disc_power_sums(P, x, r, 1)
        if ps is not None and abs(ps[0] - size) <= 1e-3:
            x = x + float(ps[1].real) / size
            break
    return [(x, size)] + first[1][1:]


def polish_root(P, lam0, k=None, radii=(1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4)):
    """Estimate and cluster size of the characteristic value nearest ``lam0``."""
    return polish_roots(P, lam0, k, radii)[0]


def find_characteristic_values(P, family, slope_tol=None):
    """Locate the real characteristic values covered by ``family``.

    Odd-order zeros of a branch show up as sign changes and are bracketed;
    even-order zeros are found as minima of ``|mu_j|``.  Candidates closer
    than ``tau_cluster`` are merged into one characteristic value.
    """
    ztol = tau_zero(P)
    slope_tol = 1e-4 * (1.0 + P.scale) if slope_tol is None else slope_tol
    lam, W, V, S = family.grid, family.values, family.vectors, family.slopes
    cands = []  # (lambda, accurate)

    def bracket_root(lo, hi, ua, ub):
        """Root of a sign-changing branch; flags a fallback as inaccurate."""
        try:
            x = brentq(lambda t: _branch_value(P, t, ua, ub), lo, hi,
                       xtol=1e-15 * max(1.0, abs(lo)), rtol=1e-15, maxiter=200)
            return x, True
        except ValueError:
            # branch identity is ambiguous inside the bracket (near a crossing)
            x, _ = min_abs(lo, hi, ua, ub)
            return x, False

    def min_abs(lo, hi, ua, ub):
        res = minimize_scalar(lambda t: abs(_branch_value(P, t, ua, ub)),
                              bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-13 * max(1.0, abs(lo))})
        return float(res.x), res.fun

    def simple_slope(x):
        """``|mu'(x)|`` of the branch vanishing at ``x``, or 0 unless it alone is small."""
        w, Vx = np.linalg.eigh(eval_pencil(P, x))
        order = np.argsort(np.abs(w))
        if w.size > 1 and abs(w[order[1]]) <= math.sqrt(ztol):
            return 0.0
        v = Vx[:, order[0]]
        return abs(float(np.real(np.vdot(v, eval_pencil(P, x, 1) @ v))))

    last = len(lam) - 1
    # runs of samples that already sit on a zero of a branch
    for j, a, b in _runs(np.abs(W) <= ztol):
        if a == b and W[a, j] == 0.0:
            cands.append((float(lam[a]), abs(S[a, j]) > slope_tol))
            continue
        lo, hi = max(a - 1, 0), min(b + 1, last)
        ua, ub = V[lo][:, j], V[hi][:, j]
        if W[lo, j] * W[hi, j] < 0:
            x, good = bracket_root(lam[lo], lam[hi], ua, ub)
            cands.append((x, good and a == b and simple_slope(x) > slope_tol))
        else:
            x, fx = min_abs(lam[lo], lam[hi], ua, ub)
            if fx <= ztol:
                cands.append((x, False))

    fa, fb = W[:-1], W[1:]
    for i, j in zip(*np.nonzero((fa * fb < 0) & (np.abs(fa) > ztol) & (np.abs(fb) > ztol))):
        ua, ub = V[i][:, j], V[i + 1][:, j]
        x, good = bracket_root(lam[i], lam[i + 1], ua, ub)
        cands.append((x, good and simple_slope(x) > slope_tol))

    # even-order zeros: interior minima of |mu_j| below sqrt(tau_zero)
    h = np.diff(lam)
    Hmin = _hermite_min_abs(fa, fb, S[:-1], S[1:], h)
    near = (Hmin <= math.sqrt(ztol)) & (np.sign(fa) == np.sign(fb))
    near |= _local_min_mask(W, ztol)
    near &= ~_dilate(np.abs(W) <= ztol)
    for j, a, b in _runs(near):
        lo, hi = lam[max(a - 1, 0)], lam[min(b + 2, last)]
        x, fx = min_abs(lo, hi, V[a][:, j], V[b + 1][:, j])
        if fx <= ztol:
            cands.append((x, False))

    cands.sort()
    groups = []
    for x, acc in cands:
        if groups and (abs(x - groups[-1][-1][0]) <= tau_cluster(x)
                       or (not acc and not groups[-1][-1][1]
                           and abs(x - groups[-1][-1][0]) <= NOISE_LINK * max(1.0, abs(x)))):
            groups[-1].append((x, acc))
        else:
            groups.append([(x, acc)])

    out = []
    for g in groups:
        accurate = [x for x, acc in g if acc]
        if accurate:
            xs = [(float(np.median(accurate)), True)]
        else:
            xs = [(x, False) for x, _ in polish_roots(P, float(np.mean([x for x, _ in g])))]
        for i, (x, acc) in enumerate(xs):
            if abs(x) <= tau_cluster(0.0):
                w0 = np.linalg.eigvalsh(eval_pencil(P, 0.0))
                if np.min(np.abs(w0)) <= ztol:
                    x = 0.0
            if any(abs(x - c.lambda0) <= tau_cluster(x) for c in out):
                continue
            w, _ = family.track_to(P, x)
            ids = tuple(int(j) for j in np.flatnonzero(np.abs(w) <= ztol))
            if not ids:
                if acc:
                    raise NumericalFailure(f"no kernel found at refined root {x!r}")
                continue
            out.append(CharacteristicValue(lambda0=x, geo_mult=len(ids), branch_ids=ids))
    out.sort(key=lambda c: c.lambda0)
    return out


def _runs(mask):
    """``(column, first, last)`` of each maximal run of True down the rows."""
    out = []
    for j in range(mask.shape[1]):
        idx = np.flatnonzero(mask[:, j])
        if idx.size == 0:
            continue
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[breaks + 1]])
        ends = np.concatenate([idx[breaks], [idx[-1]]])
        out.extend((j, int(a), int(b)) for a, b in zip(starts, ends))
    return out


def _dilate(sample_mask):
    """Interval mask: intervals touching a flagged sample."""
    return sample_mask[:-1] | sample_mask[1:]


def _local_min_mask(W, ztol):
    """Intervals adjoining a sampled local minimum of ``|mu_j|`` below ``sqrt(ztol)``."""
    A = np.abs(W)
    mask = np.zeros((len(W) - 1, W.shape[1]), dtype=bool)
    if len(W) < 3:
        return mask
    mid = (A[1:-1] < A[:-2]) & (A[1:-1] <= A[2:]) & (A[1:-1] <= math.sqrt(ztol))
    mid &= np.sign(W[:-2]) == np.sign(W[2:])
    mask[:-1] |= mid
    return mask


# -- derivatives ---------------------------------------------------------

def finite_difference_weights(nodes, order):
    """Weights ``w`` with ``sum w_i f(x_i) ~ f^(order)(0)`` on the given nodes."""
    nodes = np.asarray(nodes, dtype=float)
    m = nodes.size
    if order >= m:
        raise ValueError("need more nodes than the derivative order")
    A = np.vander(nodes, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(A, rhs)


@dataclass(frozen=True, eq=False)
class BranchDerivatives:
    """Taylor data of the vanishing branches at a characteristic value.

    ``mu[i, r]`` and ``u[i, r]`` are the ``r``-th derivatives of branch ``i``
    (gauge: ``(u_i(lam0), u_i(lam))`` real positive); ``mu_err``/``u_err``
    are Richardson error estimates.  ``family_ids[i]`` names the matching
    branch of the family, ``signs[i]`` the signs of the branch at
    ``lam0 - eps`` and ``lam0 + eps``.
    """

    lambda0: float
    step: float
    mu: np.ndarray
    mu_err: np.ndarray
    u: np.ndarray
    u_err: np.ndarray
    family_ids: tuple
    signs: np.ndarray
    unreliable: tuple = field(default=())

    @property
    def max_order(self):
        return self.mu.shape[1] - 1

    def vanishing_order(self, i, rel=1e-6):
        """First ``r >= 1`` whose derivative is distinguishable from zero."""
        scale = max(1.0, float(np.max(np.abs(self.mu[:, 1:]))))
        for r in range(1, self.max_order + 1):
            thr = max(100 * self.mu_err[i, r], rel * scale * math.factorial(r))
            if abs(self.mu[i, r]) > thr:
                return r
        return None


def _richardson(D, p0):
    """Two-level Richardson on estimates at ``h, h/2, h/4`` with error ``h^p0``."""
    f1 = 2.0 ** p0
    f2 = 2.0 ** (p0 + 2)
    r1a = (f1 * D[1] - D[0]) / (f1 - 1)
    r1b = (f1 * D[2] - D[1]) / (f1 - 1)
    r2 = (f2 * r1b - r1a) / (f2 - 1)
    return r2, np.abs(r2 - r1b)


def _local_samples(P, lam0, k, steps, xs):
    """Eigenpairs of the ``k`` smallest branches at ``lam0 +- s * x``.

    Branches are tracked outward-in on each side, the left side anchored on
    the right.  Also returns the largest ``|mu|`` seen (the matrix norm, for
    the rounding model), the smallest modulus among the remaining
    eigenvalues, and whether the ``k`` branches stay the ``k`` smallest.
    """
    right = np.array(sorted({s * x for s in steps for x in xs}))
    w_r, V_r = solve_hermitian(eval_pencil_batch(P, lam0 + right))
    w_l, V_l = solve_hermitian(eval_pencil_batch(P, lam0 - right))
    vals, vecs = {}, {}
    ref = None
    norm, sep, clean = 0.0, np.inf, True
    for side, w_s, V_s, sgn in ((0, w_r, V_r, 1.0), (1, w_l, V_l, -1.0)):
        prev = ref
        for i in range(len(right) - 1, -1, -1):
            order = np.argsort(np.abs(w_s[i]))
            idx = order[:k]
            idx = idx[np.argsort(w_s[i][idx])]
            w, U = w_s[i][idx], V_s[i][:, idx]
            rest = np.abs(w_s[i][order[k:]])
            if rest.size:
                sep = min(sep, float(rest.min()))
                clean &= bool(np.abs(w).max() < 0.5 * rest.min())
            norm = max(norm, float(np.abs(w_s[i]).max()))
            if prev is not None:
                perm, _ = _match(_overlaps(prev, U))
                w, U = w[perm], U[:, perm]
            if side == 0 and i == len(right) - 1:
                ref = U
            prev = U
            vals[sgn * right[i]] = w
            vecs[sgn * right[i]] = U
    return vals, vecs, norm, sep, clean


def _aligned(U, target):
    ph = np.einsum("ij,ij->j", target.conj(), U)
    mag = np.abs(ph)
    return U * np.where(mag > 0, ph.conj() / np.where(mag > 0, mag, 1), 1.0)


STEP_FACTORS = (0.25, 1.0, 4.0, 16.0)


def branch_derivatives(P, family, cv, max_order=None, h0=1e-3):
    """Derivatives ``mu^(r)(lam0)`` and ``u^(r)(lam0)`` of the vanishing branches.

    Central differences on a symmetric stencil (no centre node, where the
    eigenvectors are not determined) at steps ``h, h/2, h/4``, combined by
    Richardson extrapolation.  The base step is ``h0 * max(1, |lam0|)``,
    enlarged for orders above three; each derivative is then taken from the
    multiple of the base step (see ``STEP_FACTORS``) whose error estimate,
    Richardson difference plus a model of rounding noise, is smallest.
    """
    lam0 = cv.lambda0
    k = cv.geo_mult
    if max_order is None:
        max_order = k + 2
    J = max_order // 2 + 2
    h = h0 * max(1.0, abs(lam0)) * 2.0 ** max(0, max_order - 3)
    xs = np.arange(1, J + 1, dtype=float)
    nodes = np.concatenate([-xs[::-1], xs])
    eps_mach = np.finfo(float).eps

    samples = []
    for f in STEP_FACTORS:
        hs = h * f
        steps = [hs, hs / 2, hs / 4]
        vals, vecs, norm, sep, clean = _local_samples(P, lam0, k, steps, xs)
        if f == 1.0 or clean:
            samples.append((f, steps, vals, vecs, norm, sep))
    base = next(smp for smp in samples if smp[0] == 1.0)
    _, base_steps, vals, vecs, _, _ = base
    right = np.array(sorted(t for t in vals if t > 0))

    def stencil_estimates(smp, order, target):
        _, steps, sv, sV, norm, sep = smp
        Dm, Du = [], []
        wts = finite_difference_weights(nodes, order)
        for st in steps:
            Dm.append(sum(wt * sv[x * st] for wt, x in zip(wts, nodes)) / st**order)
            Du.append(sum(wt * _aligned(sV[x * st], target) for wt, x in zip(wts, nodes))
                      / st**order)
        p0 = 2 * J - order + (order % 2)
        mu_r, mu_e = _richardson(np.array(Dm), p0)
        u_r, u_e = _richardson(np.array(Du), p0)
        noise = 10 * eps_mach * norm * np.abs(wts).sum() / steps[-1] ** order
        return mu_r, mu_e + noise, u_r, np.linalg.norm(u_e, axis=0) + noise / max(sep, 1e-300)

    # phase-align against a provisional centre vector, then re-gauge
    _, _, u0, _ = stencil_estimates(base, 0, vecs[min(right)])
    u0 = u0 / np.linalg.norm(u0, axis=0)
    _, _, u0b, _ = stencil_estimates(base, 0, u0)
    u0 = u0b / np.linalg.norm(u0b, axis=0)

    # put every step's branches in the order of the base step
    aligned_samples = []
    for f, steps, sv, sV, norm, sep in samples:
        t0 = min(t for t in sv if t > 0)
        perm, _ = _match(_overlaps(u0, sV[t0]))
        sv = {t: w[perm] for t, w in sv.items()}
        sV = {t: U[:, perm] for t, U in sV.items()}
        aligned_samples.append((f, steps, sv, sV, norm, sep))

    mu = np.zeros((k, max_order + 1))
    mu_err = np.zeros_like(mu)
    u = np.zeros((k, max_order + 1, P.n), dtype=complex)
    u_err = np.zeros((k, max_order + 1))
    cols = np.arange(k)
    for r in range(max_order + 1):
        est = [stencil_estimates(smp, r, u0) for smp in aligned_samples]
        me = np.array([e[1] for e in est])
        ue = np.array([e[3] for e in est])
        bm, bu = np.argmin(me, axis=0), np.argmin(ue, axis=0)
        mu[:, r] = np.array([e[0] for e in est])[bm, cols]
        mu_err[:, r] = me[bm, cols]
        u[:, r, :] = np.array([e[2].T for e in est])[bu, cols]
        u_err[:, r] = ue[bu, cols]
    u[:, 0, :] = u0.T
    mu[:, 0] = 0.0

    eps = max(right)
    signs = np.stack([np.sign(vals[-eps]), np.sign(vals[eps])], axis=1).astype(int)

    # associate local branches with family labels
    if cv.branch_ids:
        _, Vf = family.track_to(P, lam0 + eps)
        Ff = Vf[:, list(cv.branch_ids)]
        perm, _ = _match(_overlaps(vecs[eps], Ff))
        fam = tuple(int(cv.branch_ids[p]) for p in perm)
    else:
        fam = ()

    scale = 1.0 + P.scale
    bad = tuple(i for i in range(k)
                if np.any(mu_err[i, 1:] > 1e-5 * scale * np.array(
                    [math.factorial(r) for r in range(1, max_order + 1)]) *
                    np.maximum(1.0, np.abs(mu[i, 1:]))))
    if bad:
        warnings.warn(f"derivative estimates at {lam0!r} flagged unreliable for branches {bad}",
                      RuntimeWarning, stacklevel=2)
    return BranchDerivatives(lam0, h, mu, mu_err, u, u_err, fam, signs, bad)


# -- export --------------------------------------------------------------

def curves_csv(family):
    """Eigencurves as CSV: one row per (sample, branch), 17 significant digits."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    n = family.n
    head = ["lambda", "branch", "mu"]
    for i in range(n):
        head += [f"re_u_{i}", f"im_u_{i}"]
    wr.writerow(head)
    for k, lam in enumerate(family.grid):
        for j in range(n):
            row = [f"{lam:.17g}", str(j), f"{family.values[k, j]:.17g}"]
            for z in family.vectors[k, :, j]:
                row += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            wr.writerow(row)
    return buf.getvalue()
