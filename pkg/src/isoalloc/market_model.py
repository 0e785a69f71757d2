"""Asset/signal covariance triples and the metrics defined on an allocation operator.

Positions are ``w = L.T @ s`` with ``L`` of shape (m, n): m signals, n assets.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .linalg_core import check_spd, sym_power

SINGULAR_VALUE_SLACK = 1e-8


class PredictabilityWarning(UserWarning):
    """Normalized predictability has singular values above one."""


class InconsistentTripleError(ValueError):
    """The joint covariance of returns and signals is not positive semidefinite."""


@dataclass(frozen=True, eq=False)
class CovarianceTriple:
    """Second moments ``omega = E[r r^T]``, ``xi = E[s s^T]``, ``pi = E[r s^T]``."""

    omega: np.ndarray
    xi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        omega = check_spd(self.omega, "omega")
        xi = check_spd(self.xi, "xi")
        pi = np.array(self.pi, dtype=float)
        n, m = len(omega), len(xi)
        if pi.shape != (n, m):
            raise ValueError(f"pi must have shape {(n, m)}, got {pi.shape}")
        if m < n:
            raise ValueError(f"need at least as many signals as assets (m={m} < n={n})")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "pi", pi)
        top = np.linalg.svd(self.pi_tilde, compute_uv=False)
        if top.size and top[0] > 1.0 + SINGULAR_VALUE_SLACK:
            warnings.warn(
                f"normalized predictability has singular value {top[0]:.6g} > 1",
                PredictabilityWarning,
                stacklevel=3,
            )

    @property
    def n(self) -> int:
        return self.omega.shape[0]

    @property
    def m(self) -> int:
        return self.xi.shape[0]

    @cached_property
    def omega_inv_sqrt(self) -> np.ndarray:
        return sym_power(self.omega, -0.5, checked=True)

    @cached_property
    def xi_inv_sqrt(self) -> np.ndarray:
        return sym_power(self.xi, -0.5, checked=True)

    @cached_property
    def omega_sqrt(self) -> np.ndarray:
        return sym_power(self.omega, 0.5, checked=True)

    @cached_property
    def xi_sqrt(self) -> np.ndarray:
        return sym_power(self.xi, 0.5, checked=True)

    @cached_property
    def pi_tilde(self) -> np.ndarray:
        return self.omega_inv_sqrt @ self.pi @ self.xi_inv_sqrt

    def joint_covariance(self) -> np.ndarray:
        """Block covariance of the stacked vector ``(r, s)``."""
        return np.block([[self.omega, self.pi], [self.pi.T, self.xi]])


def _check_operator(l, t: CovarianceTriple) -> np.ndarray:
    l = np.asarray(l, dtype=float)
    if l.shape != (t.m, t.n):
        raise ValueError(f"allocation operator must have shape {(t.m, t.n)}, got {l.shape}")
    return l


def normalized_predictability(t: CovarianceTriple) -> np.ndarray:
    return t.pi_tilde.copy()


def expected_pnl(l, t: CovarianceTriple) -> float:
    """``Tr(L Pi)``."""
    l = _check_operator(l, t)
    return float(np.sum(l * t.pi.T))


def pnl_variance(l, t: CovarianceTriple, mode: str = "approx") -> float:
    """PnL variance: ``Tr(Xi L Omega L^T)``, plus ``Tr(Pi L Pi L)`` when ``mode="full"``."""
    l = _check_operator(l, t)
    first = float(np.sum((t.xi @ l @ t.omega) * l))
    if mode == "approx":
        return first
    if mode == "full":
        pl = t.pi @ l
        return first + float(np.sum(pl * pl.T))
    raise ValueError(f"mode must be 'approx' or 'full', got {mode!r}")


def total_variance_law_check(l, t: CovarianceTriple) -> tuple[float, float]:
    """Full variance versus ``E[Var(pnl|s)] + Var(E[pnl|s])``."""
    l = _check_operator(l, t)
    lhs = pnl_variance(l, t, "full")
    xi_inv = np.linalg.inv(t.xi)
    beta = t.pi @ xi_inv  # E[r|s] = beta s
    cond_cov = t.omega - beta @ t.pi.T
    exp_cond_var = float(np.sum((t.xi @ l @ cond_cov) * l))
    pl = t.pi @ l
    var_cond_mean = float(np.sum(pl * pl.T)) + float(np.sum((t.xi @ l @ t.pi @ xi_inv @ t.pi.T) * l))
    return lhs, exp_cond_var + var_cond_mean


def sharpe(l, t: CovarianceTriple, annualization: float = 1.0, mode: str = "approx") -> float:
    mean = expected_pnl(l, t)
    if mean == 0.0:
        return 0.0
    return float(annualization * mean / np.sqrt(pnl_variance(l, t, mode)))


class SpectrumRatios(NamedTuple):
    effective_rank: float
    participation_ratio: float


def spectrum_ratios(singular_values) -> SpectrumRatios:
    c = np.asarray(singular_values, dtype=float)
    if c.ndim != 1 or c.size == 0 or np.any(c < 0) or not np.any(c > 0):
        raise ValueError("spectrum must be a nonempty nonnegative vector with a positive entry")
    n = c.size
    c2 = c**2
    return SpectrumRatios(
        effective_rank=float(np.sum(c) ** 2 / (n * np.sum(c2))),
        participation_ratio=float(np.sum(c2) ** 2 / (n * np.sum(c2**2))),
    )


def anisotropy_metric(tt, eta: float) -> float:
    """``(1/n) ||TT^T - eta Id||_F^2`` for the Gram matrix ``TT^T``."""
    tt = np.asarray(tt, dtype=float)
    n = tt.shape[0]
    d = tt - eta * np.eye(n)
    return float(np.sum(d * d) / n)


@dataclass(frozen=True)
class IsotropyReport:
    variance: float
    anisotropy: float
    participation_ratio: float
    effective_rank: float


def unbiased_operator(l, t: CovarianceTriple) -> np.ndarray:
    """``Xi^{1/2} L Omega^{1/2}``: the operator expressed in the Riccati isotropic bases."""
    l = _check_operator(l, t)
    return t.xi_sqrt @ l @ t.omega_sqrt


def isotropy_report(l, t: CovarianceTriple, eta: float = 1.0, sigma: float | None = None) -> IsotropyReport:
    """Anisotropy diagnostics of an allocation, with ``T`` scaled so that ``Tr(TT^T) = n sigma_L^2 / sigma^2``.

    By default ``sigma`` is the allocation's own risk, which saturates the variance.
    """
    lub = unbiased_operator(l, t)
    variance = float(np.sum(lub * lub))
    if sigma is None:
        sigma = np.sqrt(variance)
    tt = (t.n / sigma**2) * (lub.T @ lub)
    svals = np.sqrt(np.clip(np.linalg.eigvalsh(tt), 0.0, None))
    ratios = spectrum_ratios(svals)
    return IsotropyReport(
        variance=variance,
        anisotropy=anisotropy_metric(tt, eta),
        participation_ratio=ratios.participation_ratio,
        effective_rank=ratios.effective_rank,
    )


def marginal_risks(l, t: CovarianceTriple) -> tuple[np.ndarray, np.ndarray]:
    """Squared column norms (per return mode) and row norms (per signal mode) of the unbiased operator."""
    lub = unbiased_operator(l, t)
    sq = lub * lub
    return sq.sum(axis=0), sq.sum(axis=1)


def transform_triple(t: CovarianceTriple, x, y) -> CovarianceTriple:
    """Express the triple in new coordinates ``s' = X^T s`` and ``r' = Y^T r``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    omega = y.T @ t.omega @ y
    xi = x.T @ t.xi @ x
    return CovarianceTriple(0.5 * (omega + omega.T), 0.5 * (xi + xi.T), y.T @ t.pi @ x)


def transform_operator(l, x, y) -> np.ndarray:
    """Operator in the coordinates of ``transform_triple``: ``X^{-1} L Y^{-T}``."""
    return np.linalg.solve(np.asarray(x, dtype=float), np.asarray(l, dtype=float)) @ np.linalg.inv(
        np.asarray(y, dtype=float)
    ).T


def joint_sampler_factor(t: CovarianceTriple) -> np.ndarray:
    """Factor ``F`` with ``F F^T`` equal to the joint covariance of ``(r, s)``.

    Raises ``InconsistentTripleError`` if that joint covariance is not PSD.
    """
    joint = t.joint_covariance()
    w, v = np.linalg.eigh(joint)
    if w[0] < -1e-12 * max(w[-1], 1e-300):
        raise InconsistentTripleError(
            f"joint covariance of (r, s) is not PSD: minimum eigenvalue {w[0]:.6g}"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


def sample_joint(t: CovarianceTriple, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``size`` joint Gaussian samples; returns ``(r, s)`` of shapes (size, n), (size, m)."""
    factor = joint_sampler_factor(t)
    z = rng.standard_normal((size, factor.shape[1])) @ factor.T
    return z[:, : t.n], z[:, t.n :]


class MonteCarloMoments(NamedTuple):
    mean: float
    mean_se: float
    variance: float
    variance_se: float


def monte_carlo_pnl(l, t: CovarianceTriple, n_samples: int = 1_000_000, seed: int = 0,
                    chunk: int = 200_000) -> MonteCarloMoments:
    """Monte Carlo mean and variance of ``s^T L r`` with standard errors."""
    l = _check_operator(l, t)
    factor = joint_sampler_factor(t)
    rng = np.random.default_rng(seed)
    sums = np.zeros(4)
    done = 0
    while done < n_samples:
        k = min(chunk, n_samples - done)
        z = rng.standard_normal((k, factor.shape[1])) @ factor.T
        r, s = z[:, : t.n], z[:, t.n :]
        x = np.einsum("ij,ij->i", s @ l, r)
        sums += [x.sum(), (x**2).sum(), (x**3).sum(), (x**4).sum()]
        done += k
    n = float(n_samples)
    m1 = sums[0] / n
    # central moments from raw moments
    r2, r3, r4 = sums[1] / n, sums[2] / n, sums[3] / n
    c2 = r2 - m1**2
    c4 = r4 - 4 * m1 * r3 + 6 * m1**2 * r2 - 3 * m1**4
    var = c2 * n / (n - 1)
    return MonteCarloMoments(
        mean=m1,
        mean_se=float(np.sqrt(c2 / n)),
        variance=float(var),
        variance_se=float(np.sqrt(max(c4 - c2**2, 0.0) / n)),
    )
