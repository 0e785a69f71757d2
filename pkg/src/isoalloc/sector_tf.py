"""Uniform sector trend-following model.

Returns follow ``r_t = beta mu_t + eps_t`` with an AR(1) trend
``mu_t = q mu_{t-1} + xi_t`` and ``beta = beta0 sqrt(1 - q^2)``; signals are the
normalized EMA ``s_t = p s_{t-1} + sqrt(1 - p^2) r_{t-1}``. With uniform noise
correlations every moment matrix is ``a Id + b J`` and all of them share the
eigenvectors ``1/sqrt(n)`` (mode 1) and its orthogonal complement (mode 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .irmv_solver import IrmvConfig, solve_irmv
from .linalg_core import StructuredUniform
from .market_model import CovarianceTriple

ANNUALIZATION = math.sqrt(252.0)


@dataclass(frozen=True)
class SectorParams:
    n: int = 10
    beta0: float = 0.1
    p: float = 0.99
    q: float = 0.99
    rho_eps: float = 0.0
    rho_xi: float = 0.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (0.0 < self.p < 1.0 and 0.0 < self.q < 1.0):
            raise ValueError("p and q must lie in (0, 1)")
        if self.beta0 < 0:
            raise ValueError("beta0 must be nonnegative")
        self.eps_cov
        self.xi_cov

    @property
    def eps_cov(self) -> StructuredUniform:
        return StructuredUniform(self.n, 1.0 - self.rho_eps, self.rho_eps)

    @property
    def xi_cov(self) -> StructuredUniform:
        return StructuredUniform(self.n, 1.0 - self.rho_xi, self.rho_xi)

    @property
    def Q(self) -> float:
        return (1.0 - self.p * self.q) / self.beta0**2

    @property
    def R(self) -> float:
        return 1.0 + self.q**2 - 2.0 * self.p**2 * self.q**2

    @property
    def pi_coef(self) -> float:
        """Factor ``q sqrt(1-p^2) / (1-pq)`` multiplying ``beta0^2 Omega_xi`` in Pi."""
        return self.q * math.sqrt(1.0 - self.p**2) / (1.0 - self.p * self.q)

    @property
    def xi_coef(self) -> float:
        """Factor ``(1+pq)/(1-pq)`` multiplying ``beta0^2 Omega_xi`` in Xi."""
        return (1.0 + self.p * self.q) / (1.0 - self.p * self.q)

    def replace(self, **kw) -> "SectorParams":
        d = dict(n=self.n, beta0=self.beta0, p=self.p, q=self.q, rho_eps=self.rho_eps, rho_xi=self.rho_xi)
        d.update(kw)
        return SectorParams(**d)


@dataclass(frozen=True)
class ModeMoments:
    """Eigenvalues of the moment matrices on mode 1 (index 0) and mode 2 (index 1)."""

    omega: np.ndarray
    xi: np.ndarray
    pi: np.ndarray
    eps: np.ndarray
    trend: np.ndarray
    mult: np.ndarray

    @property
    def psi(self) -> np.ndarray:
        return self.pi / np.sqrt(self.omega * self.xi)


def mode_moments(params: SectorParams) -> ModeMoments:
    e = np.array([params.eps_cov.lambda1, params.eps_cov.lambda2])
    x = np.array([params.xi_cov.lambda1, params.xi_cov.lambda2])
    b2 = params.beta0**2
    return ModeMoments(
        omega=e + b2 * x,
        xi=e + params.xi_coef * b2 * x,
        pi=params.pi_coef * b2 * x,
        eps=e,
        trend=x,
        mult=np.array([1.0, params.n - 1.0]),
    )


def build_triple(params: SectorParams) -> CovarianceTriple:
    n, b2 = params.n, params.beta0**2
    eps, xi = params.eps_cov.dense(), params.xi_cov.dense()
    return CovarianceTriple(
        omega=eps + b2 * xi,
        xi=eps + params.xi_coef * b2 * xi,
        pi=params.pi_coef * b2 * xi,
    )


def single_asset_sharpe(params: SectorParams) -> float:
    p, q, Q, R = params.p, params.q, params.Q, params.R
    return ANNUALIZATION * q * math.sqrt(1.0 - p**2) / math.sqrt(Q**2 + 2.0 * Q + R)


def conventional_tf_sharpe(params: SectorParams) -> float:
    p, q, Q, R, n = params.p, params.q, params.Q, params.R, params.n
    re, rx = params.rho_eps, params.rho_xi
    den = Q**2 + 2.0 * Q + R + (n - 1) * (Q**2 * re**2 + 2.0 * Q * re * rx + R * rx**2)
    return ANNUALIZATION * math.sqrt(n) * q * math.sqrt(1.0 - p**2) / math.sqrt(den)


class StrategyKind(enum.Enum):
    CONVENTIONAL_TF = "ConventionalTF"
    ISOTROPIC_MEAN = "IsotropicMean"
    CLOSED_FORM_MV = "ClosedFormMV"
    EXACT_MV = "ExactMV"


@dataclass(frozen=True)
class IrmvRegularized:
    eta: float = 1.0
    tau: float = 1.0


@dataclass(frozen=True)
class EigenWeights:
    lambda1: float
    lambda2: float

    def dense(self, n: int) -> np.ndarray:
        """``L = a_w Id + b_w J`` with ``a_w = lambda2`` and ``b_w = (lambda1 - lambda2)/n``."""
        return self.lambda2 * np.eye(n) + (self.lambda1 - self.lambda2) / n * np.ones((n, n))


def _full_variance(lw: np.ndarray, mm: ModeMoments) -> float:
    return float(np.sum(mm.mult * lw**2 * (mm.omega * mm.xi + mm.pi**2)))


def _irmv_theta(psi: np.ndarray, mult: np.ndarray, n: int, cfg: IrmvConfig) -> np.ndarray:
    spectrum = np.repeat(psi, mult.astype(int))
    order = np.argsort(-spectrum, kind="stable")
    theta = np.empty(n)
    theta[order] = solve_irmv(spectrum[order], cfg).theta
    # mode 1 sits at index 0, mode 2 occupies the remaining entries
    return np.array([theta[0], theta[-1] if n > 1 else theta[0]])


def eigen_weights(kind, params: SectorParams, sigma: float = 1.0) -> EigenWeights:
    """Eigenvalues ``(lambda1, lambda2)`` of the strategy's symmetric operator ``L``."""
    mm = mode_moments(params)
    n = params.n
    if kind is StrategyKind.CONVENTIONAL_TF:
        lw = np.ones(2)
        lw *= sigma / math.sqrt(_full_variance(lw, mm))
    elif kind is StrategyKind.ISOTROPIC_MEAN:
        lw = sigma / np.sqrt(n * mm.omega * mm.xi)
    elif kind is StrategyKind.CLOSED_FORM_MV:
        total = float(np.sum(mm.mult * mm.psi**2))
        lw = sigma / math.sqrt(total) * mm.pi / (mm.omega * mm.xi)
    elif kind is StrategyKind.EXACT_MV:
        # per-mode first-order condition in (eps, trend) eigenvalues
        Q, R = params.Q, params.R
        e, x = mm.eps, mm.trend
        den = e**2 + (2.0 / Q) * e * x + (R / Q**2) * x**2
        lw = (params.q * math.sqrt(1.0 - params.p**2) / Q) * x / den
        lw *= sigma / math.sqrt(_full_variance(lw, mm))
    elif isinstance(kind, IrmvRegularized):
        theta = _irmv_theta(mm.psi, mm.mult, n, IrmvConfig(kind.eta, kind.tau, sigma))
        lw = sigma / np.sqrt(n * mm.omega * mm.xi) * theta
    else:
        raise TypeError(f"unknown strategy {kind!r}")
    return EigenWeights(float(lw[0]), float(lw[1]))


def strategy_operator(kind, params: SectorParams, sigma: float = 1.0) -> np.ndarray:
    return eigen_weights(kind, params, sigma).dense(params.n)


def lead_lag_ratio(w: EigenWeights) -> float:
    return w.lambda1 / w.lambda2 - 1.0


def strategy_sharpe(kind, params: SectorParams) -> float:
    """Annualized Sharpe using the full (fourth-moment) PnL variance."""
    mm = mode_moments(params)
    w = eigen_weights(kind, params)
    lw = np.array([w.lambda1, w.lambda2])
    mean = float(np.sum(mm.mult * lw * mm.pi))
    return ANNUALIZATION * mean / math.sqrt(_full_variance(lw, mm))


def crash_ratio(kind_a, kind_b, params: SectorParams) -> float:
    """``lambda1(a) / lambda1(b) - 1`` at equal risk budget."""
    return eigen_weights(kind_a, params).lambda1 / eigen_weights(kind_b, params).lambda1 - 1.0


def crash_ratio_approximation(params: SectorParams) -> float:
    """Large-n estimate of ``lambda1(MV) / lambda1(IM)``, i.e. of ``crash_ratio + 1``."""
    re, rx = params.rho_eps, params.rho_xi
    return math.sqrt(rx / (1.0 - rx) * (1.0 - re) / re)


def crash_condition(params: SectorParams) -> bool:
    """``1 + n b_Pi/a_Pi >= sqrt((1 + n b_Omega/a_Omega)(1 + n b_Xi/a_Xi))``, i.e. ``psi1 >= psi2``."""
    mm = mode_moments(params)
    lhs = mm.pi[0] / mm.pi[1]
    return bool(lhs >= math.sqrt(mm.omega[0] / mm.omega[1] * mm.xi[0] / mm.xi[1]))


def crash_pnl(kind, params: SectorParams, signals, sigma_eps: float = 3.0, sigma: float = 1.0) -> float:
    """PnL of the strategy's positions under the uniform shock ``r = -sigma_eps 1``."""
    l = strategy_operator(kind, params, sigma)
    w = l.T @ np.asarray(signals, dtype=float)
    return float(w @ (-sigma_eps * np.ones(params.n)))


def second_variance_ratio(params: SectorParams) -> float:
    """``Tr(Pi L Pi L) / Tr(Xi L Omega L^T)`` for the closed-form mean-variance operator."""
    mm = mode_moments(params)
    w = eigen_weights(StrategyKind.CLOSED_FORM_MV, params)
    lw2 = np.array([w.lambda1, w.lambda2]) ** 2
    return float(np.sum(mm.mult * lw2 * mm.pi**2) / np.sum(mm.mult * lw2 * mm.omega * mm.xi))


def eigenmode_ratios(params: SectorParams) -> tuple[float, float]:
    """Closed-form over exact mean-variance eigenvalues, per mode."""
    cf = eigen_weights(StrategyKind.CLOSED_FORM_MV, params)
    ex = eigen_weights(StrategyKind.EXACT_MV, params)
    return cf.lambda1 / ex.lambda1, cf.lambda2 / ex.lambda2


def mv_anisotropy(params: SectorParams) -> float:
    """``1/psi - 1`` with psi the participation ratio of the canonical spectrum."""
    mm = mode_moments(params)
    c2 = mm.mult * mm.psi**2
    c4 = mm.mult * mm.psi**4
    return float(params.n * np.sum(c4) / np.sum(c2) ** 2 - 1.0)


# simulation ----------------------------------------------------------------

def burn_in(params: SectorParams) -> int:
    return math.ceil(10.0 / (1.0 - params.p))


def simulate_paths(params: SectorParams, horizon: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Simulate ``horizon`` steps of returns and signals, each of shape (horizon, n).

    The trend starts from its stationary law and the first ``burn_in`` signal
    steps are discarded. Row t holds ``r_t`` and ``s_t``, where ``s_t`` only
    uses returns up to t-1.
    """
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError("horizon must be positive")
    n, q, p = params.n, params.q, params.p
    total = horizon + burn_in(params)
    rng = np.random.default_rng(seed)
    chol_xi = np.linalg.cholesky(params.xi_cov.dense())
    chol_eps = np.linalg.cholesky(params.eps_cov.dense())
    mu0 = rng.standard_normal(n) @ chol_xi.T / math.sqrt(1.0 - q**2)
    innov = rng.standard_normal((total, n)) @ chol_xi.T
    noise = rng.standard_normal((total, n)) @ chol_eps.T
    mu, _ = sps.lfilter([1.0], [1.0, -q], innov, axis=0, zi=(q * mu0)[None, :])
    beta = params.beta0 * math.sqrt(1.0 - q**2)
    returns = beta * mu + noise
    signals = sps.lfilter([0.0, math.sqrt(1.0 - p**2)], [1.0, -p], returns, axis=0)
    b = total - horizon
    return returns[b:], signals[b:]


def batch_stderr(x: np.ndarray, n_batches: int = 100) -> tuple[float, float]:
    """Mean of a serially correlated series and its batch-means standard error."""
    x = np.asarray(x, dtype=float)
    k = len(x) // n_batches
    if k < 2:
        raise ValueError("series too short for the requested batch count")
    means = x[: k * n_batches].reshape(n_batches, k).mean(axis=1)
    return float(x.mean()), float(means.std(ddof=1) / math.sqrt(n_batches))


def realized_sharpe(pnl, annualization: float = ANNUALIZATION, n_batches: int = 100) -> tuple[float, float]:
    """Annualized realized Sharpe and a batch-means standard error."""
    pnl = np.asarray(pnl, dtype=float)
    k = len(pnl) // n_batches
    if k < 2:
        raise ValueError("series too short for the requested batch count")
    batches = pnl[: k * n_batches].reshape(n_batches, k)
    per_batch = batches.mean(axis=1) / batches.std(axis=1, ddof=1)
    value = pnl.mean() / pnl.std(ddof=1)
    return float(annualization * value), float(annualization * per_batch.std(ddof=1) / math.sqrt(n_batches))


def empirical_strategy_sharpe(kind, params: SectorParams, horizon: int, seed: int,
                              return_stderr: bool = False):
    """Realized Sharpe of ``w_t = L^T s_t`` on a simulated path."""
    returns, signals = simulate_paths(params, horizon, seed)
    l = strategy_operator(kind, params)
    pnl = np.einsum("ti,ti->t", signals @ l, returns)
    value, se = realized_sharpe(pnl)
    return (value, se) if return_stderr else value


@dataclass(frozen=True)
class MomentCheck:
    name: str
    measured: float
    analytic: float
    stderr: float

    @property
    def z(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.measured == self.analytic else math.inf
        return (self.measured - self.analytic) / self.stderr


def moment_checks(params: SectorParams, horizon: int, seed: int, n_batches: int = 100) -> list[MomentCheck]:
    """Empirical second moments of a simulated path against the analytic triple.

    Uses the diagonal entry and, when n > 1, the (0, 1) entry of each matrix.
    """
    returns, signals = simulate_paths(params, horizon, seed)
    t = build_triple(params)
    entries = [(0, 0)] + ([(0, 1)] if params.n > 1 else [])
    out = []
    for name, a, b, ref in (("omega", returns, returns, t.omega), ("xi", signals, signals, t.xi),
                            ("pi", returns, signals, t.pi)):
        for i, j in entries:
            mean, se = batch_stderr(a[:, i] * b[:, j], n_batches)
            out.append(MomentCheck(f"{name}[{i},{j}]", mean, float(ref[i, j]), se))
    return out
