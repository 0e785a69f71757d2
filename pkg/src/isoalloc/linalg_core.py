"""Dense symmetric positive-definite algebra and structured ``a*Id + b*J`` matrices."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

PSD_FLOOR = 1e-12
SYM_TOL = 1e-12
ORTHO_TOL = 1e-8


class NotPositiveDefiniteError(ValueError):
    """Raised when a matrix fails the positive-definiteness check."""


class NotOrthogonalError(ValueError):
    """Raised when a matrix expected to be orthogonal is not."""


def check_spd(a, name: str = "matrix") -> np.ndarray:
    """Validate a symmetric positive-definite matrix and return it as a float array.

    Eigenvalues below ``PSD_FLOOR`` times the largest eigenvalue are rejected,
    never clipped.
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = np.max(np.abs(a)) if a.size else 0.0
    if np.max(np.abs(a - a.T), initial=0.0) > SYM_TOL * max(scale, 1e-300):
        raise ValueError(f"{name} is not symmetric")
    a = 0.5 * (a + a.T)
    eig = np.linalg.eigvalsh(a)
    lmax = eig[-1] if eig.size else 0.0
    if lmax <= 0.0 or eig[0] < PSD_FLOOR * lmax:
        raise NotPositiveDefiniteError(
            f"{name} is not positive definite: minimum eigenvalue {eig[0]:.6g} "
            f"(floor {PSD_FLOOR * max(lmax, 0.0):.3g})"
        )
    return a


def sym_power(a, power: float, *, checked: bool = False) -> np.ndarray:
    """Return ``a**power`` for an SPD matrix through its eigendecomposition."""
    if not checked:
        a = check_spd(a)
    w, v = np.linalg.eigh(a)
    out = (v * w**power) @ v.T
    return 0.5 * (out + out.T)


def sym_sqrt(a) -> np.ndarray:
    """Unique SPD square root of ``a``."""
    return sym_power(a, 0.5)


def sym_inv_sqrt(a) -> np.ndarray:
    """Inverse of the SPD square root of ``a``."""
    return sym_power(a, -0.5)


def cholesky_lower(a) -> np.ndarray:
    """Lower-triangular Cholesky factor with positive diagonal."""
    a = check_spd(a)
    return np.linalg.cholesky(a)


def cholesky_rotation(a) -> np.ndarray:
    """Rotation ``R = a^{-1/2} chol(a)`` linking the symmetric and Cholesky roots."""
    a = check_spd(a)
    r = sym_power(a, -0.5, checked=True) @ np.linalg.cholesky(a)
    if np.max(np.abs(r.T @ r - np.eye(len(r)))) > 1e-10:
        raise NotOrthogonalError("Cholesky rotation lost orthogonality")
    return r


def isotropic_basis(a, anchor: str = "riccati", rotation=None) -> np.ndarray:
    """Whitening matrix ``W`` with ``W.T @ a @ W = Id``.

    ``anchor="riccati"`` gives ``a^{-1/2}``; ``anchor="cholesky"`` gives
    ``chol(a)^{-T}``. An optional orthogonal ``rotation`` is applied on the
    right, which spans every isotropic basis of ``a``.
    """
    a = check_spd(a)
    if anchor == "riccati":
        w = sym_power(a, -0.5, checked=True)
    elif anchor == "cholesky":
        chol = np.linalg.cholesky(a)
        w = sla.solve_triangular(chol, np.eye(len(a)), lower=True).T
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    if rotation is not None:
        rotation = check_orthogonal(rotation)
        w = w @ rotation
    return w


def check_orthogonal(r, tol: float = ORTHO_TOL) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise NotOrthogonalError(f"expected a square matrix, got shape {r.shape}")
    err = np.max(np.abs(r.T @ r - np.eye(len(r))), initial=0.0)
    if err > tol:
        raise NotOrthogonalError(f"matrix is not orthogonal (max |R^T R - I| = {err:.3g})")
    return r


@dataclass(frozen=True)
class SvdTriplet:
    """Full SVD ``M = left @ diag(singular_values) @ right[:, :n].T`` for an n x m matrix."""

    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        n = len(self.singular_values)
        return (self.left * self.singular_values) @ self.right[:, :n].T


def svd_thin(m) -> SvdTriplet:
    """SVD of an n x m matrix with m >= n and a deterministic sign convention.

    Each singular pair is flipped so that the largest-magnitude entry of the
    left vector is positive (ties go to the lowest index).
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[1] < m.shape[0]:
        raise ValueError(f"svd_thin needs an n x m matrix with m >= n, got {m.shape}")
    n = m.shape[0]
    u, s, vh = np.linalg.svd(m, full_matrices=True)
    v = vh.T.copy()
    for k in range(n):
        idx = int(np.argmax(np.abs(u[:, k])))
        if u[idx, k] < 0:
            u[:, k] = -u[:, k]
            v[:, k] = -v[:, k]
    return SvdTriplet(left=u, singular_values=s, right=v)


@dataclass(frozen=True)
class StructuredUniform:
    """The matrix ``a*Id + b*J`` of size n, with J the all-ones matrix."""

    n: int
    a: float
    b: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        if not (self.a > 0 and self.a + self.n * self.b > 0):
            raise NotPositiveDefiniteError(
                f"a*Id + b*J is not positive definite (a={self.a}, a+n*b={self.a + self.n * self.b})"
            )

    @property
    def lambda1(self) -> float:
        """Eigenvalue on the ones direction (multiplicity 1)."""
        return self.a + self.n * self.b

    @property
    def lambda2(self) -> float:
        """Eigenvalue on the orthogonal complement (multiplicity n-1)."""
        return self.a

    def dense(self) -> np.ndarray:
        return self.a * np.eye(self.n) + self.b * np.ones((self.n, self.n))

    @classmethod
    def from_eigenvalues(cls, n: int, lambda1: float, lambda2: float) -> "StructuredUniform":
        return cls(n, lambda2, (lambda1 - lambda2) / n)


def structured_inverse(s: StructuredUniform) -> StructuredUniform:
    a, b, n = s.a, s.b, s.n
    return StructuredUniform(n, 1.0 / a, -b / (a * (a + n * b)))


def structured_inv_sqrt(s: StructuredUniform) -> StructuredUniform:
    a, b, n = s.a, s.b, s.n
    ra, rl = np.sqrt(a), np.sqrt(a + n * b)
    return StructuredUniform(n, 1.0 / ra, (ra - rl) / (n * rl * ra))


def mahalanobis_basis_distance(a, r, eta: float) -> float:
    """Trace ``Tr[A^eta + A^(1+eta) - 2 R A^(1/2+eta)]`` for an SPD ``A`` and orthogonal ``R``."""
    a = check_spd(a)
    r = check_orthogonal(r)
    if r.shape != a.shape:
        raise ValueError("rotation and matrix sizes differ")
    w, v = np.linalg.eigh(a)
    term = w**eta + w ** (1.0 + eta)
    half = (v * w ** (0.5 + eta)) @ v.T
    return float(np.sum(term) - 2.0 * np.trace(r @ half))


def rotation_angle(r) -> float:
    """Minimal rotation angle in radians of a 3x3 rotation matrix."""
    r = check_orthogonal(r)
    if r.shape != (3, 3):
        raise ValueError("rotation_angle expects a 3x3 matrix")
    if np.linalg.det(r) < 0:
        raise NotOrthogonalError("matrix is a reflection, not a rotation")
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))
