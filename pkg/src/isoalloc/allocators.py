"""Closed-form allocation operators.

Every allocator returns the (m, n) operator ``L`` with positions ``w = L.T @ s``.
Allocators that are intrinsic to the triple accept an optional ``basis`` pair
``(W_r, W_s)`` of whitening matrices (``W_r.T @ omega @ W_r = Id`` and
``W_s.T @ xi @ W_s = Id``); the result does not depend on that choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .linalg_core import SvdTriplet, sym_power, svd_thin
from .market_model import CovarianceTriple

RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """A matrix that must have full row rank does not."""


class ZeroPredictabilityError(ValueError):
    """The triple carries no predictability, so mean-variance is undefined."""


def _basis(t: CovarianceTriple, basis) -> tuple[np.ndarray, np.ndarray]:
    if basis is None:
        return t.omega_inv_sqrt, t.xi_inv_sqrt
    w_r, w_s = (np.asarray(b, dtype=float) for b in basis)
    if w_r.shape != (t.n, t.n) or w_s.shape != (t.m, t.m):
        raise ValueError("basis matrices have the wrong shape")
    return w_r, w_s


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return sigma


def _isometry_operator(w_r, w_s, svd: SvdTriplet, sigma: float, k: int | None = None) -> np.ndarray:
    n = len(svd.singular_values)
    k = n if k is None else k
    core = svd.right[:, :k] @ svd.left[:, :k].T
    return (sigma / np.sqrt(k)) * (w_s @ core @ w_r.T)


def mean_variance(t: CovarianceTriple, sigma: float, *, basis=None) -> np.ndarray:
    """``L^T = (1/gamma) Omega^{-1} Pi Xi^{-1}`` with gamma set by the approximate variance."""
    sigma = _check_sigma(sigma)
    w_r, w_s = _basis(t, basis)
    pw = w_r.T @ t.pi @ w_s
    norm = np.sqrt(np.sum(pw * pw))
    if norm == 0.0:
        raise ZeroPredictabilityError("Tr(Pi~^T Pi~) = 0; mean-variance leverage is undefined")
    return (sigma / norm) * (w_s @ pw.T @ w_r.T)


@dataclass(frozen=True)
class CanonicalDecomposition:
    """Singular triplets of the whitened predictability and the unit-risk canonical operators."""

    singular_values: np.ndarray
    portfolio_operators: np.ndarray  # (n, m, n): one operator per canonical pair
    left: np.ndarray
    right: np.ndarray

    def combine(self, weights) -> np.ndarray:
        """``sum_k weights[k] * L_k``."""
        return np.tensordot(np.asarray(weights, dtype=float), self.portfolio_operators, axes=1)


def canonical_decomposition(t: CovarianceTriple, *, basis=None) -> CanonicalDecomposition:
    w_r, w_s = _basis(t, basis)
    svd = svd_thin(w_r.T @ t.pi @ w_s)
    n = t.n
    ops = np.stack([np.outer(w_s @ svd.right[:, k], w_r @ svd.left[:, k]) for k in range(n)])
    return CanonicalDecomposition(svd.singular_values, ops, svd.left, svd.right)


def erp_balanced(t: CovarianceTriple, sigma: float) -> np.ndarray:
    """``L = kappa Xi^{-1/2} Omega^{-1/2}`` anchored on the symmetric roots (square case only)."""
    sigma = _check_sigma(sigma)
    if t.m != t.n:
        raise ValueError(f"erp_balanced requires m = n, got m={t.m}, n={t.n}")
    return (sigma / np.sqrt(t.n)) * (t.xi_inv_sqrt @ t.omega_inv_sqrt)


def dual_isotropy_rotation(t: CovarianceTriple, form: str = "svd") -> np.ndarray:
    """Optimal rotation ``R*`` between the symmetric return and signal isotropic bases.

    ``form`` selects the route: ``"svd"`` (polar factor of ``Omega^{-1/2} Xi^{1/2}``),
    ``"return"`` or ``"signal"`` (the two inverse-square-root expressions).
    """
    if t.m != t.n:
        raise ValueError("dual-isotropy rotation requires m = n")
    a = t.omega_inv_sqrt @ t.xi_sqrt
    if form == "svd":
        svd = svd_thin(a)
        return svd.left @ svd.right.T
    if form == "return":
        inner = t.omega_inv_sqrt @ t.xi @ t.omega_inv_sqrt
        return sym_power(0.5 * (inner + inner.T), -0.5) @ a
    if form == "signal":
        inner = t.xi_inv_sqrt @ t.omega @ t.xi_inv_sqrt
        return t.omega_sqrt @ t.xi_inv_sqrt @ sym_power(0.5 * (inner + inner.T), -0.5)
    raise ValueError(f"unknown form {form!r}")


def isotropy_enforced(t: CovarianceTriple, m_map, sigma: float, *, basis=None,
                      route: str = "svd") -> np.ndarray:
    """Isotropic allocation along the mapping ``M`` (m x n, so that ``M^T`` maps signals to returns).

    ``route="svd"`` uses the SVD of ``W_r^T M^T Xi W_s``; ``route="inverse_sqrt"``
    uses ``(Omega^{-1/2} M^T Xi M Omega^{-1/2})^{-1/2} Omega^{-1/2} M^T Xi^{1/2}``
    in the symmetric bases.
    """
    sigma = _check_sigma(sigma)
    m_map = np.asarray(m_map, dtype=float)
    if m_map.shape != (t.m, t.n):
        raise ValueError(f"mapping must have shape {(t.m, t.n)}, got {m_map.shape}")
    if route == "svd":
        w_r, w_s = _basis(t, basis)
        svd = svd_thin(w_r.T @ m_map.T @ t.xi @ w_s)
        _check_rank(svd.singular_values, "W_r^T M^T Xi W_s")
        return _isometry_operator(w_r, w_s, svd, sigma)
    if route == "inverse_sqrt":
        a = t.omega_inv_sqrt @ m_map.T @ t.xi_sqrt
        _check_rank(np.linalg.svd(a, compute_uv=False), "Omega^{-1/2} M^T Xi^{1/2}")
        g = a @ a.T
        iso = sym_power(0.5 * (g + g.T), -0.5) @ a  # B U_n^T
        return (sigma / np.sqrt(t.n)) * (t.xi_inv_sqrt @ iso.T @ t.omega_inv_sqrt)
    raise ValueError(f"unknown route {route!r}")


def _check_rank(svals, what: str):
    svals = np.asarray(svals)
    if svals[0] == 0.0:
        raise RankDeficiencyError(f"{what} is zero")
    bad = int(np.sum(svals < RANK_TOL * svals[0]))
    if bad:
        raise RankDeficiencyError(f"{what} is rank deficient: {bad} mode(s) below {RANK_TOL:g} x largest")


def dual_isotropy_balanced(t: CovarianceTriple, sigma: float, *, basis=None) -> np.ndarray:
    """``L = (sigma/sqrt n) Xi^{-1/2} R*^T Omega^{-1/2}`` (square case)."""
    if t.m != t.n:
        raise ValueError(f"dual_isotropy_balanced requires m = n, got m={t.m}, n={t.n}")
    return isotropy_enforced(t, np.eye(t.n), sigma, basis=basis)


def isotropic_mean(t: CovarianceTriple, sigma: float, *, basis=None, truncate: bool = False) -> np.ndarray:
    """Equal-weight sum of canonical portfolios, ``(sigma/sqrt n) sum_k L_k``.

    With ``truncate=True`` canonical modes below ``1e-10`` times the largest are
    dropped and the risk is spread over the surviving modes.
    """
    sigma = _check_sigma(sigma)
    w_r, w_s = _basis(t, basis)
    svd = svd_thin(w_r.T @ t.pi @ w_s)
    svals = svd.singular_values
    if svals[0] == 0.0:
        raise RankDeficiencyError("normalized predictability is zero")
    k = int(np.sum(svals >= RANK_TOL * svals[0]))
    if k < t.n and not truncate:
        raise RankDeficiencyError(
            f"normalized predictability is rank deficient: {t.n - k} mode(s) below "
            f"{RANK_TOL:g} x largest; pass truncate=True to drop them"
        )
    return _isometry_operator(w_r, w_s, svd, sigma, k)


def principal_portfolio_isotropic(t: CovarianceTriple, sigma: float, *, basis=None) -> np.ndarray:
    """``L = (sigma/sqrt n) Xi^{-1/2} Pi~^T (Pi~ Pi~^T)^{-1/2} Omega^{-1/2}`` via an explicit inverse root."""
    sigma = _check_sigma(sigma)
    w_r, w_s = _basis(t, basis)
    pw = w_r.T @ t.pi @ w_s
    g = pw @ pw.T
    g = 0.5 * (g + g.T)
    eig = np.linalg.eigvalsh(g)
    if eig[-1] <= 0.0 or eig[0] < (RANK_TOL**2) * eig[-1]:
        raise RankDeficiencyError("Pi~ Pi~^T is singular")
    core = pw.T @ sym_power(g, -0.5, checked=True)
    return (sigma / np.sqrt(t.n)) * (w_s @ core @ w_r.T)


# scheme menu -------------------------------------------------------------

@dataclass(frozen=True)
class MeanVariance:
    pass


@dataclass(frozen=True)
class ErpBalanced:
    pass


@dataclass(frozen=True)
class DualIsotropyBalanced:
    pass


@dataclass(frozen=True)
class IsotropyEnforced:
    m_map: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class IsotropicMean:
    truncate: bool = False


@dataclass(frozen=True)
class PrincipalIsotropic:
    pass


@dataclass(frozen=True)
class Irmv:
    eta: float
    tau: float


AllocationScheme = (MeanVariance | ErpBalanced | DualIsotropyBalanced | IsotropyEnforced
                    | IsotropicMean | PrincipalIsotropic | Irmv)

SCHEME_NAMES = {
    "mean_variance": MeanVariance,
    "erp_balanced": ErpBalanced,
    "dual_isotropy_balanced": DualIsotropyBalanced,
    "isotropy_enforced": IsotropyEnforced,
    "isotropic_mean": IsotropicMean,
    "principal_isotropic": PrincipalIsotropic,
    "irmv": Irmv,
}


def allocate(scheme, t: CovarianceTriple, sigma: float) -> np.ndarray:
    """Dispatch a scheme object to its allocator."""
    if isinstance(scheme, MeanVariance):
        return mean_variance(t, sigma)
    if isinstance(scheme, ErpBalanced):
        return erp_balanced(t, sigma)
    if isinstance(scheme, DualIsotropyBalanced):
        return dual_isotropy_balanced(t, sigma)
    if isinstance(scheme, IsotropyEnforced):
        return isotropy_enforced(t, scheme.m_map, sigma)
    if isinstance(scheme, IsotropicMean):
        return isotropic_mean(t, sigma, truncate=scheme.truncate)
    if isinstance(scheme, PrincipalIsotropic):
        return principal_portfolio_isotropic(t, sigma)
    if isinstance(scheme, Irmv):
        from .irmv_solver import IrmvConfig, irmv_allocation

        return irmv_allocation(t, IrmvConfig(eta=scheme.eta, tau=scheme.tau, sigma=sigma))
    raise TypeError(f"unknown allocation scheme {scheme!r}")


def make_scheme(name: str, **kwargs):
    try:
        cls = SCHEME_NAMES[name]
    except KeyError:
        raise ValueError(f"unknown scheme {name!r}; expected one of {sorted(SCHEME_NAMES)}") from None
    return cls(**kwargs)


class PortfolioAllocator(TransformerMixin, BaseEstimator):
    """Estimator wrapper: ``fit`` on a covariance triple, ``transform`` signals into positions.

    Parameters
    ----------
    scheme : str
        One of ``SCHEME_NAMES``.
    sigma : float
        Risk budget (approximate PnL volatility).
    eta, tau : float
        IRMV isotropy center and budget, used only by ``scheme="irmv"``.
    m_map : array of shape (m, n), optional
        Signal mapping for ``scheme="isotropy_enforced"``.
    truncate : bool
        Drop negligible canonical modes in ``scheme="isotropic_mean"``.
    """

    def __init__(self, scheme="mean_variance", sigma=1.0, eta=1.0, tau=1.0, m_map=None, truncate=False):
        self.scheme = scheme
        self.sigma = sigma
        self.eta = eta
        self.tau = tau
        self.m_map = m_map
        self.truncate = truncate

    def _scheme(self):
        if self.scheme == "irmv":
            return Irmv(self.eta, self.tau)
        if self.scheme == "isotropy_enforced":
            if self.m_map is None:
                raise ValueError("scheme 'isotropy_enforced' needs m_map")
            return IsotropyEnforced(np.asarray(self.m_map, dtype=float))
        if self.scheme == "isotropic_mean":
            return IsotropicMean(truncate=self.truncate)
        return make_scheme(self.scheme)

    def fit(self, X, y=None):
        """Fit on a ``CovarianceTriple`` or an ``(omega, xi, pi)`` tuple."""
        triple = X if isinstance(X, CovarianceTriple) else CovarianceTriple(*X)
        self.operator_ = allocate(self._scheme(), triple, self.sigma)
        self.n_features_in_ = triple.m
        return self

    def transform(self, X):
        """Map signals of shape (k, m) to positions of shape (k, n)."""
        check_is_fitted(self, "operator_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} signals, got {X.shape[1]}")
        return X @ self.operator_
