"""Stored-energy densities, their quadratic forms, and the tangential relaxation.

Q3 is the second derivative of W at the identity, kept as a symmetric 6x6
matrix over an orthonormal basis of symmetric 3x3 matrices.  Q2 relaxes Q3
over normal corrections c (x) n + n (x) c; the minimizing c is a linear map
of the tangential input and feeds the recovery deformation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateMaterialError, DifferentiationError, ParameterError

# Orthonormal basis of Sym(3): diagonal units, then (e_i e_j^T + e_j e_i^T)/sqrt(2)
_SQRT2 = np.sqrt(2.0)
_OFFDIAG = [(0, 1), (0, 2), (1, 2)]


def sym(F):
    F = np.asarray(F, dtype=float)
    return 0.5 * (F + F.T)


def vec6(S):
    """Coordinates of a symmetric 3x3 matrix in the orthonormal Sym(3) basis."""
    return np.array([S[0, 0], S[1, 1], S[2, 2],
                     _SQRT2 * S[0, 1], _SQRT2 * S[0, 2], _SQRT2 * S[1, 2]])


def basis_sym3():
    out = []
    for i in range(3):
        B = np.zeros((3, 3))
        B[i, i] = 1.0
        out.append(B)
    for i, j in _OFFDIAG:
        B = np.zeros((3, 3))
        B[i, j] = B[j, i] = 1.0 / _SQRT2
        out.append(B)
    return out


@dataclass(frozen=True)
class StoredEnergy:
    """Frame-indifferent energy density W with optional analytic hessian at Id."""

    evaluate: Callable[[np.ndarray], float]
    hessian_at_identity: Optional[np.ndarray]  # 6x6 in the Sym(3) basis, or None
    coercivity_constant: float
    name: str = ""


def make_isotropic(mu, lam):
    """St Venant-Kirchhoff density W(F) = mu |E|^2 + lam/2 (tr E)^2, E the Green strain.

    Equivalently (mu/4)|F^T F - Id|^2 + (lam/8) tr(F^T F - Id)^2.  The hessian
    at the identity is Q3(F) = 2 mu |sym F|^2 + lam (tr F)^2.
    """
    mu, lam = float(mu), float(lam)
    if mu <= 0.0:
        raise ParameterError("mu must be positive")
    if lam < 0.0:
        raise ParameterError("lambda must be nonnegative")

    def evaluate(F):
        F = np.asarray(F, dtype=float)
        E = 0.5 * (F.T @ F - np.eye(3))
        return mu * float(np.sum(E * E)) + 0.5 * lam * float(np.trace(E)) ** 2

    v = np.array([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    H = 2.0 * mu * np.eye(6) + lam * np.outer(v, v)
    # W >= (mu/2) dist^2(F, SO(3)) holds for F within distance ~0.2 of SO(3)
    return StoredEnergy(evaluate=evaluate, hessian_at_identity=H,
                        coercivity_constant=0.5 * mu,
                        name=f"isotropic(mu={mu}, lambda={lam})")


@dataclass(frozen=True)
class QuadForm3:
    """Quadratic form on 3x3 matrices that sees only the symmetric part."""

    matrix6: np.ndarray  # symmetric 6x6, positive definite unless explicitly relaxed

    def apply(self, F):
        s = vec6(sym(F))
        return float(s @ self.matrix6 @ s)

    def bilinear(self, F, G):
        return float(vec6(sym(F)) @ self.matrix6 @ vec6(sym(G)))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(self.matrix6)[0])

    @staticmethod
    def from_matrix(M6, require_positive_definite=True):
        M6 = np.asarray(M6, dtype=float)
        if M6.shape != (6, 6):
            raise ParameterError("Q3 matrix must be 6x6")
        if np.max(np.abs(M6 - M6.T)) > 1e-12:
            raise ParameterError("Q3 matrix must be symmetric")
        q3 = QuadForm3(matrix6=0.5 * (M6 + M6.T))
        if require_positive_definite and q3.min_eigenvalue() <= 0.0:
            raise ParameterError("Q3 must be positive definite on symmetric matrices")
        return q3

    @staticmethod
    def from_upper_triangle(entries):
        """Build from the 21 row-major upper-triangular entries of the 6x6 matrix."""
        entries = np.asarray(entries, dtype=float)
        if entries.shape != (21,):
            raise ParameterError("expected 21 upper-triangular entries")
        M = np.zeros((6, 6))
        k = 0
        for i in range(6):
            for j in range(i, 6):
                M[i, j] = M[j, i] = entries[k]
                k += 1
        return QuadForm3.from_matrix(M)


def as_q3(material, step=1e-4):
    """Coerce a material argument (StoredEnergy or QuadForm3) to its QuadForm3."""
    if isinstance(material, QuadForm3):
        return material
    if isinstance(material, StoredEnergy):
        if material.hessian_at_identity is not None:
            return QuadForm3.from_matrix(material.hessian_at_identity)
        return q3_from_energy(material, step=step)
    raise ParameterError(f"expected StoredEnergy or QuadForm3, got {type(material)!r}")


def q3_from_energy(W, step=1e-4):
    """Assemble Q3 = D^2 W(Id) by central second finite differences.

    Diagonal entries use the three-point formula, off-diagonal entries the
    four-point formula; the assembled 6x6 must be symmetric to 1e-8.
    """
    basis = basis_sym3()
    I = np.eye(3)
    H = np.zeros((6, 6))
    for i in range(6):
        Bi = basis[i]
        H[i, i] = (W.evaluate(I + step * Bi) - 2.0 * W.evaluate(I)
                   + W.evaluate(I - step * Bi)) / step ** 2
        for j in range(i + 1, 6):
            Bj = basis[j]
            val = (W.evaluate(I + step * (Bi + Bj))
                   - W.evaluate(I + step * (Bi - Bj))
                   - W.evaluate(I - step * (Bi - Bj))
                   + W.evaluate(I - step * (Bi + Bj))) / (4.0 * step ** 2)
            H[i, j] = val
            H[j, i] = val
    if not np.all(np.isfinite(H)):
        raise DifferentiationError("energy density produced non-finite values near Id")
    asym = float(np.max(np.abs(H - H.T)))
    if asym > 1e-8:
        raise DifferentiationError(f"assembled hessian asymmetry {asym:.2e} > 1e-8")
    return QuadForm3.from_matrix(0.5 * (H + H.T))


@dataclass(frozen=True)
class QuadForm2:
    """Tangential relaxation of Q3 at one surface frame, with its minimizer map.

    Q2(F_tan) = min over c in R^3 of Q3(F_hat + c (x) n + n (x) c), where
    F_hat embeds the 2x2 tangential input in the (t1, t2) frame.  The solve
    is a 3x3 SPD system; c is linear in F_tan and returned in ambient
    coordinates.
    """

    base: QuadForm3
    n: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    _chol: np.ndarray        # Cholesky factor of the coupling matrix K
    _L_mats: tuple           # the three coupling directions e_i (x) n + n (x) e_i

    def _embed(self, F22):
        F22 = np.asarray(F22, dtype=float)
        T = np.column_stack([self.t1, self.t2])
        return T @ F22 @ T.T

    def _rhs(self, F_hat):
        return np.array([self.base.bilinear(F_hat, L) for L in self._L_mats])

    def minimizer(self, F22):
        """The unique c attaining the minimum, as an ambient 3-vector."""
        b = self._rhs(self._embed(F22))
        y = np.linalg.solve(self._chol, -b)
        return np.linalg.solve(self._chol.T, y)

    def apply_tangential(self, F22):
        F_hat = self._embed(F22)
        b = self._rhs(F_hat)
        y = np.linalg.solve(self._chol, -b)
        c = np.linalg.solve(self._chol.T, y)
        # at the optimum the quadratic collapses to Q3(F_hat) + b . c
        return self.base.apply(F_hat) + float(b @ c)


def reduce_q2(q3, n, t1=None, t2=None):
    """Relax q3 over normal corrections at the frame (t1, t2, n).

    When the tangent frame is omitted a deterministic orthonormal completion
    of n is used (isotropic materials are insensitive to this choice).
    """
    n = np.asarray(n, dtype=float)
    nn = np.linalg.norm(n)
    if abs(nn - 1.0) > 1e-10:
        raise ParameterError(f"normal must be a unit vector, |n| = {nn}")
    if t1 is None or t2 is None:
        t1, t2 = _complete_frame(n)
    else:
        t1 = np.asarray(t1, dtype=float)
        t2 = np.asarray(t2, dtype=float)
    L_mats = tuple(np.outer(e, n) + np.outer(n, e) for e in np.eye(3))
    K = np.array([[q3.bilinear(Li, Lj) for Lj in L_mats] for Li in L_mats])
    try:
        chol = np.linalg.cholesky(K)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMaterialError(
            "normal-coupling block of Q3 is not positive definite") from exc
    return QuadForm2(base=q3, n=n, t1=t1, t2=t2, _chol=chol, _L_mats=L_mats)


def _complete_frame(n):
    ref = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    t1 = ref - (ref @ n) * n
    t1 /= np.linalg.norm(t1)
    t2 = np.cross(n, t1)
    return t1, t2


def isotropic_q2_closed_form(mu, lam, F22):
    """2 mu |sym F|^2 + (2 mu lam / (2 mu + lam)) (tr F)^2 for tangential inputs."""
    S = 0.5 * (np.asarray(F22, float) + np.asarray(F22, float).T)
    return (2.0 * mu * float(np.sum(S * S))
            + (2.0 * mu * lam / (2.0 * mu + lam)) * float(np.trace(S)) ** 2)


def relax_q2_brute_force(q3, n, F22, t1=None, t2=None, grid_radius=None,
                         grid_points=7, iterations=60):
    """Independent minimization of Q3 over c: coarse grid + exact-line-search descent.

    Uses only evaluations of Q3 (central differences of a quadratic are exact),
    so it shares no code path with the linear solve in reduce_q2.
    """
    n = np.asarray(n, dtype=float)
    if t1 is None or t2 is None:
        t1, t2 = _complete_frame(n)
    T = np.column_stack([t1, t2])
    F_hat = T @ np.asarray(F22, dtype=float) @ T.T

    def q(c):
        C = np.outer(c, n)
        return q3.apply(F_hat + C + C.T)

    if grid_radius is None:
        grid_radius = 2.0 * (1.0 + float(np.max(np.abs(F22))))
    axis = np.linspace(-grid_radius, grid_radius, grid_points)
    best_c, best_v = np.zeros(3), q(np.zeros(3))
    for a in axis:
        for b in axis:
            for d in axis:
                c = np.array([a, b, d])
                v = q(c)
                if v < best_v:
                    best_c, best_v = c, v

    delta = 1e-3 * (1.0 + grid_radius)
    c = best_c
    for _ in range(iterations):
        g = np.array([(q(c + delta * e) - q(c - delta * e)) / (2.0 * delta)
                      for e in np.eye(3)])
        gn = np.linalg.norm(g)
        if gn < 1e-14:
            break
        d = -g / gn
        curv = (q(c + delta * d) - 2.0 * q(c) + q(c - delta * d)) / delta ** 2
        if curv <= 0.0:
            break
        step = gn / curv
        c = c + step * d
    return q(c), c
