"""Problem data: polynomial Hermitian pencils and linearized Hamiltonians.

A pencil is stored as ``L(lam) - g(lam) I`` with ``L(lam) = sum_k lam**k L_k``
and ``g(lam) = sum_k lam**k g_k``.  The split between the matrix part and
the scalar part is kept because the behaviour at infinity depends on it.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "TAU_HERM",
    "TAU_SING",
    "PencilError",
    "InvalidProblemError",
    "NumericalFailure",
    "InvariantBreach",
    "SymmetrizationWarning",
    "PolyPencil",
    "HamiltonianProblem",
    "GridSpec",
    "eval_pencil",
    "eval_pencil_batch",
    "load_problem",
    "problem_to_dict",
    "problem_from_dict",
    "save_problem",
]

TAU_HERM = 1e-12
TAU_SING = 1e-12


class PencilError(Exception):
    """Base class for all errors raised by this package."""


class InvalidProblemError(PencilError, ValueError):
    """Input data violates a structural invariant."""


class NumericalFailure(PencilError, RuntimeError):
    """A numerical procedure failed to converge or to decide."""


class InvariantBreach(PencilError, AssertionError):
    """Two independent computations of the same quantity disagree."""


class SymmetrizationWarning(UserWarning):
    """Input matrix was nearly Hermitian and has been symmetrized."""


def _as_matrix(a, n=None, name="matrix"):
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidProblemError(f"{name} must be square, got shape {m.shape}")
    if n is not None and m.shape[0] != n:
        raise InvalidProblemError(f"{name} must be {n}x{n}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidProblemError(f"{name} has non-finite entries")
    return m


def _hermitize(m, name, tol=TAU_HERM):
    """Return ``(m + m^*)/2`` if ``m`` is Hermitian to relative ``tol``."""
    dev = np.max(np.abs(m - m.conj().T)) if m.size else 0.0
    if dev == 0.0:
        return m
    scale = np.max(np.abs(m))
    if dev > tol * scale:
        raise InvalidProblemError(
            f"{name} is not Hermitian: max|A - A*| = {dev:.3e} exceeds "
            f"{tol:g} * max|A| = {tol * scale:.3e}")
    warnings.warn(f"{name} symmetrized (max|A - A*| = {dev:.3e})",
                  SymmetrizationWarning, stacklevel=3)
    return 0.5 * (m + m.conj().T)


def _freeze(m):
    m = np.ascontiguousarray(m)
    m.setflags(write=False)
    return m


@dataclass(frozen=True, eq=False)
class PolyPencil:
    """Hermitian matrix pencil ``sum_k lam**k L_k - (sum_k lam**k g_k) I``.

    ``coeffs`` holds ``L_0 .. L_p`` and ``g_coeffs`` holds ``g_0 .. g_q``.
    Trailing entries may vanish; ``p`` and ``q`` are the declared degrees.
    """

    coeffs: tuple
    g_coeffs: tuple = (0.0,)
    n: int = field(init=False)
    p: int = field(init=False)
    q: int = field(init=False)

    def __post_init__(self):
        coeffs = list(self.coeffs)
        if not coeffs:
            raise InvalidProblemError("pencil needs at least one coefficient")
        first = _as_matrix(coeffs[0], name="L_0")
        n = first.shape[0]
        if n < 1:
            raise InvalidProblemError("n must be >= 1")
        mats = []
        for k, c in enumerate(coeffs):
            mats.append(_freeze(_hermitize(_as_matrix(c, n, f"L_{k}"), f"L_{k}")))
        g = np.atleast_1d(np.array(self.g_coeffs, dtype=float))
        if g.ndim != 1 or g.size == 0:
            g = np.zeros(1)
        if not np.all(np.isfinite(g)):
            raise InvalidProblemError("g has non-finite entries")
        p = len(mats) - 1
        q = g.size - 1
        if p < 1 and q < 1:
            raise InvalidProblemError("constant pencil: need p >= 1 or q >= 1")
        if p == q and np.allclose(mats[p], g[q] * np.eye(n), rtol=0, atol=0):
            raise InvalidProblemError(
                "degenerate leading data: lam^p L_p equals lam^q g_q I")
        object.__setattr__(self, "coeffs", tuple(mats))
        object.__setattr__(self, "g_coeffs", tuple(float(x) for x in g))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def degree(self):
        return max(self.p, self.q)

    @property
    def combined(self):
        """Coefficients ``A_k = L_k - g_k I`` of the full matrix polynomial."""
        try:
            return self._combined
        except AttributeError:
            pass
        d = self.degree
        a = np.zeros((d + 1, self.n, self.n), dtype=complex)
        for k, m in enumerate(self.coeffs):
            a[k] += m
        eye = np.eye(self.n)
        for k, gk in enumerate(self.g_coeffs):
            a[k] -= gk * eye
        a.setflags(write=False)
        object.__setattr__(self, "_combined", a)
        return a

    @property
    def scale(self):
        """``max_k max|L_k|`` joined with ``max_k |g_k|``."""
        s = max(float(np.max(np.abs(m))) for m in self.coeffs)
        return max(s, float(np.max(np.abs(self.g_coeffs))))

    def __add__(self, other):
        if not isinstance(other, PolyPencil) or other.n != self.n:
            return NotImplemented
        p = max(self.p, other.p)
        q = max(self.q, other.q)
        c = [np.zeros((self.n, self.n), complex) for _ in range(p + 1)]
        g = np.zeros(q + 1)
        for pen in (self, other):
            for k, m in enumerate(pen.coeffs):
                c[k] = c[k] + m
            g[:pen.q + 1] += pen.g_coeffs
        return PolyPencil(tuple(c), tuple(g))

    def scaled(self, c):
        """Pencil multiplied by the real constant ``c``."""
        return PolyPencil(tuple(c * m for m in self.coeffs),
                          tuple(c * x for x in self.g_coeffs))

    def shifted(self, c):
        """Pencil ``lam -> L(lam + c)``; characteristic values move by ``-c``."""
        return PolyPencil(_taylor_shift(self.coeffs, c),
                          tuple(np.real(_taylor_shift(self.g_coeffs, c))))

    def __repr__(self):
        return f"PolyPencil(n={self.n}, p={self.p}, q={self.q})"


def _taylor_shift(coeffs, c):
    """Coefficients of ``f(x + c)`` from those of ``f(x)``."""
    d = len(coeffs) - 1
    out = [0 * np.asarray(coeffs[0]) for _ in range(d + 1)]
    for k, a in enumerate(coeffs):
        for j in range(k + 1):
            out[j] = out[j] + math.comb(k, j) * c ** (k - j) * np.asarray(a)
    return tuple(out)


@dataclass(frozen=True, eq=False)
class HamiltonianProblem:
    """Linearized Hamiltonian ``J L`` with ``J`` skew-Hermitian, ``L`` Hermitian.

    ``canonical_blocks`` optionally carries ``(L_plus, L_minus)`` when
    ``J = [[0, -I], [I, 0]]`` and ``L = diag(L_plus, L_minus)``.
    """

    J: np.ndarray
    L: np.ndarray
    canonical_blocks: tuple | None = None

    def __post_init__(self):
        J = _as_matrix(self.J, name="J")
        n = J.shape[0]
        L = _hermitize(_as_matrix(self.L, n, "L"), "L")
        dev = np.max(np.abs(J + J.conj().T))
        scale = np.max(np.abs(J))
        if dev > TAU_HERM * scale:
            raise InvalidProblemError(
                f"J is not skew-Hermitian: max|J + J*| = {dev:.3e}")
        if dev:
            warnings.warn("J skew-symmetrized", SymmetrizationWarning, stacklevel=3)
            J = 0.5 * (J - J.conj().T)
        sv = np.linalg.svd(J, compute_uv=False)
        if scale == 0 or sv[-1] <= TAU_SING * sv[0]:
            raise InvalidProblemError("J singular")
        blocks = self.canonical_blocks
        if blocks is not None:
            lp, lm = blocks
            lp = _hermitize(_as_matrix(lp, name="L_plus"), "L_plus")
            lm = _hermitize(_as_matrix(lm, lp.shape[0], "L_minus"), "L_minus")
            half = lp.shape[0]
            if 2 * half != n:
                raise InvalidProblemError("canonical blocks do not match dimension of J")
            jc, lc = canonical_matrices(lp, lm)
            if not (np.array_equal(jc, J) and np.array_equal(lc, L)):
                raise InvalidProblemError(
                    "J, L do not have the canonical block structure")
            blocks = (_freeze(lp), _freeze(lm))
        object.__setattr__(self, "J", _freeze(J))
        object.__setattr__(self, "L", _freeze(L))
        object.__setattr__(self, "canonical_blocks", blocks)

    @property
    def n(self):
        return self.J.shape[0]

    @property
    def K(self):
        """``(iJ)^{-1}``, the Hermitian weight of the pencil ``L - lam K``."""
        return np.linalg.inv(1j * self.J)

    @property
    def condition_J(self):
        return float(np.linalg.cond(self.J))

    def pencil(self):
        """The linear pencil ``L - lam K``."""
        K = self.K
        return PolyPencil((self.L, -0.5 * (K + K.conj().T)))

    @classmethod
    def canonical(cls, L_plus, L_minus):
        lp = np.asarray(L_plus, dtype=complex)
        lm = np.asarray(L_minus, dtype=complex)
        J, L = canonical_matrices(lp, lm)
        return cls(J, L, (lp, lm))


def canonical_matrices(L_plus, L_minus):
    """``J = [[0, -I], [I, 0]]`` and ``L = diag(L_plus, L_minus)``."""
    half = L_plus.shape[0]
    eye = np.eye(half)
    zero = np.zeros((half, half))
    J = np.block([[zero, -eye], [eye, zero]]).astype(complex)
    L = np.block([[L_plus, zero], [zero, L_minus]]).astype(complex)
    return J, L


@dataclass(frozen=True)
class GridSpec:
    lambda_min: float
    lambda_max: float
    samples: int = 401
    refine_tol: float = 1e-9

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise InvalidProblemError("grid needs lambda_min < lambda_max")
        if self.samples < 3:
            raise InvalidProblemError("grid needs at least 3 samples")
        if not self.refine_tol > 0:
            raise InvalidProblemError("refine_tol must be positive")


def eval_pencil(P, lam, deriv_order=0):
    """``d^r/dlam^r`` of the pencil at real ``lam``, by exact polynomial calculus."""
    if deriv_order < 0:
        raise ValueError("deriv_order must be non-negative")
    A = P.combined
    out = np.zeros((P.n, P.n), dtype=complex)
    r = deriv_order
    for k in range(r, A.shape[0]):
        out += (math.perm(k, r) * lam ** (k - r)) * A[k]
    return out


def eval_pencil_batch(P, lams, deriv_order=0):
    """Stack of ``eval_pencil(P, lam, r)`` for an array of ``lam``."""
    lams = np.asarray(lams, dtype=float)
    A = P.combined
    r = deriv_order
    d = A.shape[0] - 1
    if r > d:
        return np.zeros(lams.shape + (P.n, P.n), dtype=complex)
    ks = np.arange(r, d + 1)
    fac = np.array([math.perm(int(k), r) for k in ks], dtype=float)
    powers = lams[..., None] ** (ks - r) * fac
    return np.tensordot(powers, A[r:], axes=([-1], [0]))


# -- file format ---------------------------------------------------------

def _matrix_to_json(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(obj, name):
    try:
        arr = np.array(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InvalidProblemError(f"{name}: cannot parse matrix ({exc})") from exc
    if arr.ndim == 2 and arr.shape[0] == arr.shape[1]:
        return arr.astype(complex)  # plain real entries
    if arr.ndim != 3 or arr.shape[2] != 2:
        raise InvalidProblemError(f"{name}: expected n x n list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def problem_to_dict(obj):
    if isinstance(obj, PolyPencil):
        return {"type": "pencil", "n": obj.n, "p": obj.p,
                "coeffs": [_matrix_to_json(m) for m in obj.coeffs],
                "g": [float(x) for x in obj.g_coeffs]}
    if isinstance(obj, HamiltonianProblem):
        d = {"type": "hamiltonian", "J": _matrix_to_json(obj.J),
             "L": _matrix_to_json(obj.L)}
        if obj.canonical_blocks is not None:
            lp, lm = obj.canonical_blocks
            d["canonical"] = {"L_plus": _matrix_to_json(lp),
                              "L_minus": _matrix_to_json(lm)}
        return d
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def problem_from_dict(d):
    if not isinstance(d, dict) or "type" not in d:
        raise InvalidProblemError("problem must be a JSON object with a 'type' field")
    kind = d["type"]
    if kind == "pencil":
        try:
            raw = d["coeffs"]
        except KeyError:
            raise InvalidProblemError("pencil without 'coeffs'") from None
        coeffs = [_matrix_from_json(c, f"coeffs[{k}]") for k, c in enumerate(raw)]
        if "n" in d and coeffs and coeffs[0].shape[0] != d["n"]:
            raise InvalidProblemError("declared n does not match coefficient size")
        if "p" in d and d["p"] != len(coeffs) - 1:
            raise InvalidProblemError("declared p does not match number of coefficients")
        return PolyPencil(tuple(coeffs), tuple(d.get("g", [0.0])))
    if kind == "hamiltonian":
        J = _matrix_from_json(d["J"], "J")
        L = _matrix_from_json(d["L"], "L")
        blocks = None
        if d.get("canonical") is not None:
            c = d["canonical"]
            blocks = (_matrix_from_json(c["L_plus"], "L_plus"),
                      _matrix_from_json(c["L_minus"], "L_minus"))
        return HamiltonianProblem(J, L, blocks)
    raise InvalidProblemError(f"unknown problem type {kind!r}")


def load_problem(path):
    """Read a pencil or Hamiltonian problem from a JSON file."""
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidProblemError(f"{path}: not valid JSON ({exc})") from exc
    return problem_from_dict(d)


def save_problem(obj, path):
    Path(path).write_text(json.dumps(problem_to_dict(obj), sort_keys=True))
