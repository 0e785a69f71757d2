"""Isotropy-regularized mean-variance: per-mode cubic stationarity and KKT multiplier search.

With canonical spectrum ``psi`` and ``c = sqrt(n) psi`` the problem is

    maximize   (1/n) sum c_i theta_i
    subject to (1/n) sum theta_i^2 <= 1                 (variance)
               (1/n) sum (theta_i^2 - eta)^2 <= 2 tau    (isotropy)

and stationarity reads ``c_i = (gamma - eta lambda) theta_i + lambda theta_i^3``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .allocators import canonical_decomposition
from .market_model import CovarianceTriple

KKT_TOL = 1e-8
SOLVE_TOL = 1e-10
MAX_ITER = 200


class ConvergenceError(RuntimeError):
    """A scalar multiplier solve failed to converge."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (best residual {residual:.3g})")
        self.residual = residual


class Region(enum.Enum):
    MEAN_VARIANCE_ONLY = "MeanVarianceOnly"
    BOTH_ACTIVE = "BothActive"
    ISOTROPY_ONLY = "IsotropyOnly"
    INTERIOR = "Interior"


@dataclass(frozen=True)
class IrmvConfig:
    eta: float
    tau: float
    sigma: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")
        if not self.tau > 0.0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.sigma > 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class ThetaSolution:
    theta: np.ndarray
    gamma: float
    lam: float
    variance_active: bool
    isotropy_active: bool
    residual: float

    @property
    def region(self) -> Region:
        if self.variance_active and self.isotropy_active:
            return Region.BOTH_ACTIVE
        if self.variance_active:
            return Region.MEAN_VARIANCE_ONLY
        if self.isotropy_active:
            return Region.ISOTROPY_ONLY
        return Region.INTERIOR

    @property
    def variance(self) -> float:
        return float(np.mean(self.theta**2))

    def anisotropy(self, eta: float) -> float:
        return float(np.mean((self.theta**2 - eta) ** 2))


# cubic roots ---------------------------------------------------------------

def largest_cubic_roots(c, gamma_eff, lam) -> np.ndarray:
    """Largest real root of ``lam t^3 + gamma_eff t - c = 0`` (vectorized, ``lam > 0``)."""
    c, gamma_eff, lam = np.broadcast_arrays(*(np.asarray(x, dtype=float) for x in (c, gamma_eff, lam)))
    if np.any(lam <= 0):
        raise ValueError("lam must be positive")
    p = gamma_eff / lam
    q = c / lam
    t = np.empty_like(p)

    # |p| negligible against q: the cube root is already accurate (Newton polishes it)
    a3 = np.abs(p / 3.0) ** 1.5
    tiny = (p == 0) | (np.abs(q) > 1e150 * a3)
    neg = (p < 0) & ~tiny
    pos = (p > 0) & ~tiny
    t[tiny] = np.cbrt(q[tiny])
    if np.any(neg):
        a = np.sqrt(-p[neg] / 3.0)
        x = q[neg] / np.where(a3[neg] > 0, 2.0 * a3[neg], 1.0)  # q = 0 wherever a3 underflows
        # three real roots when |x| <= 1, otherwise one (hyperbolic branch)
        t[neg] = np.where(
            np.abs(x) <= 1.0,
            2.0 * a * np.cos(np.arccos(np.clip(x, -1.0, 1.0)) / 3.0),
            2.0 * a * np.sign(x) * np.cosh(np.arccosh(np.maximum(np.abs(x), 1.0)) / 3.0),
        )
    if np.any(pos):
        a = np.sqrt(p[pos] / 3.0)
        t[pos] = 2.0 * a * np.sinh(np.arcsinh(q[pos] / (2.0 * a3[pos])) / 3.0)

    # Newton polish on the monotone branch
    for _ in range(2):
        d = 3.0 * t * t + p
        ok = d > 1e-14 * np.maximum(1.0, np.abs(p))
        step = np.where(ok, (t * t * t + p * t - q) / np.where(ok, d, 1.0), 0.0)
        t = t - step
    return t


def cubic_theta(c: float, gamma_eff: float, lam: float) -> float:
    """Largest real root of ``lam t^3 + gamma_eff t - c = 0`` where ``gamma_eff = gamma - eta*lam``."""
    return float(largest_cubic_roots(c, gamma_eff, lam))


def cardano_theta(c: float, lam: float, eta: float) -> float:
    """Trigonometric solution of ``t (t^2 - eta) = c / lam`` in the three-real-root regime."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        return float(np.cbrt(c / lam))
    x = 3.0 * np.sqrt(3.0) / (2.0 * eta**1.5) * c / lam
    if abs(x) > 1.0:
        raise ValueError(
            f"arccos argument {x:.6g} is outside [-1, 1]: single real root regime, use cubic_theta"
        )
    return float(2.0 * np.sqrt(eta / 3.0) * np.cos(np.arccos(x) / 3.0))


# solver --------------------------------------------------------------------

def _spectrum(spectrum) -> np.ndarray:
    psi = np.asarray(spectrum, dtype=float)
    if psi.ndim != 1 or psi.size == 0:
        raise ValueError("spectrum must be a nonempty vector")
    if np.any(psi < 0) or not np.all(np.isfinite(psi)):
        raise ValueError("spectrum must be finite and nonnegative")
    return psi


def _theta_family(chat: np.ndarray, omega: float, nu: float, eta: float) -> np.ndarray:
    """Stationary theta for multipliers ``(gamma, lam) = (omega, 1 - omega) / nu`` in normalized units."""
    lam = 1.0 - omega
    lin = omega - eta * lam
    if lam <= 0.0:
        return nu * chat / lin
    return largest_cubic_roots(nu * chat, lin, lam)


def _root(fn, lo: float, hi: float, what: str) -> float:
    f_lo, f_hi = fn(lo), fn(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise ConvergenceError(f"{what}: multiplier not bracketed", min(abs(f_lo), abs(f_hi)))
    try:
        return optimize.brentq(fn, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=MAX_ITER)
    except RuntimeError as exc:  # pragma: no cover - brentq budget exhausted
        raise ConvergenceError(f"{what}: {exc}", abs(fn(0.5 * (lo + hi)))) from exc


def _expand(fn, start: float, what: str) -> float:
    """Grow ``hi`` geometrically until ``fn(hi) >= 0``."""
    hi = start
    for _ in range(MAX_ITER):
        if fn(hi) >= 0.0:
            return hi
        hi *= 2.0
    raise ConvergenceError(f"{what}: could not bracket", abs(fn(hi)))


def _scale_for(chat, omega, eta, target, metric, what) -> float:
    fn = lambda nu: metric(_theta_family(chat, omega, nu, eta)) - target  # noqa: E731
    hi = _expand(fn, 1.0, what)
    return _root(fn, 0.0, hi, what)


def solve_irmv(spectrum, cfg: IrmvConfig) -> ThetaSolution:
    """Solve the IRMV problem on a canonical spectrum by enumerating constraint activity.

    Patterns are tried from fewest active constraints upward (variance only, then
    isotropy only, then both) and the first KKT-valid one is returned.
    """
    psi = _spectrum(spectrum)
    n = psi.size
    eta, tau = cfg.eta, cfg.tau
    c = np.sqrt(n) * psi
    scale = float(np.sqrt(np.mean(c**2)))

    if scale == 0.0:
        theta = np.full(n, np.sqrt(eta))
        return _finish(c, theta, 0.0, 0.0, False, False, cfg)

    chat = c / scale
    variance = lambda th: float(np.mean(th**2))  # noqa: E731
    aniso = lambda th: float(np.mean((th**2 - eta) ** 2))  # noqa: E731
    budget = 2.0 * tau

    # variance only: theta proportional to c
    theta = chat.copy()
    if aniso(theta) <= budget * (1.0 + 1e-12):
        return _finish(c, theta, scale, 0.0, True, False, cfg)

    # isotropy only: gamma = 0, saturate the isotropy budget
    nu = _scale_for(chat, 0.0, eta, budget, aniso, "isotropy-only scale")
    theta = _theta_family(chat, 0.0, nu, eta)
    if variance(theta) <= 1.0 + 1e-12:
        return _finish(c, theta, 0.0, scale / nu, False, True, cfg)

    # both active: the mix omega = gamma / (gamma + lam) sets the shape, nu saturates the variance
    def shape(omega):
        nu_w = _scale_for(chat, omega, eta, 1.0, variance, "variance scale")
        return nu_w, _theta_family(chat, omega, nu_w, eta)

    omega = _root(lambda w: aniso(shape(w)[1]) - budget, 0.0, 1.0, "isotropy/variance mix")
    nu, theta = shape(omega)
    return _finish(c, theta, scale * omega / nu, scale * (1.0 - omega) / nu, True, True, cfg)


def _finish(c, theta, gamma, lam, var_active, iso_active, cfg: IrmvConfig) -> ThetaSolution:
    eta, tau = cfg.eta, cfg.tau
    stationarity = np.abs(c - (gamma - eta * lam) * theta - lam * theta**3)
    var = float(np.mean(theta**2))
    iso = float(np.mean((theta**2 - eta) ** 2))
    parts = [float(np.max(stationarity)) if (var_active or iso_active) else 0.0,
             max(var - 1.0, 0.0), max(iso - 2.0 * tau, 0.0)]
    if var_active:
        parts.append(abs(var - 1.0))
    if iso_active:
        parts.append(abs(iso - 2.0 * tau))
    residual = max(parts)
    if residual > KKT_TOL:
        raise ConvergenceError("KKT conditions not met", residual)
    return ThetaSolution(theta=np.asarray(theta, dtype=float), gamma=float(gamma), lam=float(lam),
                         variance_active=var_active, isotropy_active=iso_active, residual=residual)


def objective(theta, spectrum) -> float:
    """``(1/n) sum c_i theta_i`` with ``c = sqrt(n) psi``."""
    psi = _spectrum(spectrum)
    return float(np.mean(np.sqrt(psi.size) * psi * np.asarray(theta)))


def theta_sharpe(theta, spectrum) -> float:
    """In-sample Sharpe ``(1/n) sum theta c / sqrt((1/n) sum theta^2)`` of a mode weighting."""
    theta = np.asarray(theta, dtype=float)
    return objective(theta, spectrum) / float(np.sqrt(np.mean(theta**2)))


def tau_threshold_upper(spectrum, eta: float) -> float:
    """Smallest ``tau`` at which the mean-variance weights satisfy the isotropy budget."""
    c = np.sqrt(len(spectrum)) * _spectrum(spectrum)
    m2 = np.mean(c**2)
    if m2 == 0.0:
        raise ValueError("spectrum is identically zero")
    return float(0.5 * (np.mean(c**4) / m2**2 - 2.0 * eta + eta**2))


def classify_region(spectrum, cfg: IrmvConfig) -> Region:
    return solve_irmv(spectrum, cfg).region


def two_mode_spectrum(n: int, m: int, c_max: float, c_min: float) -> np.ndarray:
    """Spectrum ``psi`` whose ``c = sqrt(n) psi`` has m entries ``c_max`` then n-m entries ``c_min``."""
    return np.r_[np.full(m, c_max), np.full(n - m, c_min)] / np.sqrt(n)


def exponential_spectrum(n: int, psi_ratio: float) -> np.ndarray:
    """Spectrum ``psi`` with ``c_i = exp(-i / (psi_ratio n))`` for i = 0..n-1."""
    i = np.arange(n)
    return np.exp(-i / (psi_ratio * n)) / np.sqrt(n)


def two_mode_solution(n: int, m: int, c_max: float, c_min: float, cfg: IrmvConfig) -> tuple[float, float]:
    """Two-level spectrum solved in squared weights ``(a, b) = (theta_high^2, theta_low^2)``.

    In those variables the problem is a concave maximization over a convex set,
    so the optimum is found on the isotropy ellipse (or at the mean-variance
    point when that is feasible). With ``c_min = 0`` in the isotropy-only regime
    the closed form ``theta_high = sqrt(eta + sqrt(2 tau n / m))``,
    ``theta_low = sqrt(eta)`` is returned.
    """
    if not 0 < m < n:
        raise ValueError("need 0 < m < n")
    if not (c_max >= c_min >= 0.0 and c_max > 0.0):
        raise ValueError("need c_max >= c_min >= 0 and c_max > 0")
    eta, tau = cfg.eta, cfg.tau
    wa, wb = m / n, (n - m) / n

    def var(a, b):
        return wa * a + wb * b

    def iso(a, b):
        return wa * (a - eta) ** 2 + wb * (b - eta) ** 2

    def obj(a, b):
        return wa * c_max * np.sqrt(np.maximum(a, 0.0)) + wb * c_min * np.sqrt(np.maximum(b, 0.0))

    s2 = wa * c_max**2 + wb * c_min**2
    a_mv, b_mv = c_max**2 / s2, c_min**2 / s2
    if iso(a_mv, b_mv) <= 2 * tau * (1 + 1e-12):
        return float(np.sqrt(a_mv)), float(np.sqrt(b_mv))

    r1, r2 = np.sqrt(2 * tau / wa), np.sqrt(2 * tau / wb)
    if c_min == 0.0 and var(eta + r1, eta) <= 1.0 + 1e-12:
        return float(np.sqrt(eta + r1)), float(np.sqrt(eta))

    def point(phi):
        return eta + r1 * np.cos(phi), eta + r2 * np.sin(phi)

    def feasible(phi):
        a, b = point(phi)
        return (a >= 0) & (b >= 0) & (var(a, b) <= 1.0 + 1e-15)

    def dobj(phi):
        a, b = point(phi)
        ga = -wa * c_max * r1 * np.sin(phi) / (2 * np.sqrt(max(a, 1e-300)))
        gb = wb * c_min * r2 * np.cos(phi) / (2 * np.sqrt(max(b, 1e-300))) if c_min > 0 else 0.0
        return ga + gb

    def vgap(phi):
        return var(*point(phi)) - 1.0

    grid = np.linspace(-np.pi, np.pi, 4097)
    ok = feasible(grid)
    if not np.any(ok):
        raise ValueError("two-mode model has no feasible point")
    candidates = []
    for k in range(len(grid) - 1):
        lo, hi = grid[k], grid[k + 1]
        if ok[k] and ok[k + 1]:
            if dobj(lo) > 0 >= dobj(hi):
                candidates.append(_root(dobj, lo, hi, "two-mode stationarity"))
        elif ok[k] != ok[k + 1]:
            f = lambda p: vgap(p)  # noqa: E731
            if np.sign(f(lo)) != np.sign(f(hi)):
                candidates.append(_root(f, lo, hi, "two-mode variance boundary"))
            else:
                candidates.append(lo if ok[k] else hi)
    candidates.extend(grid[ok])
    values = [obj(*point(p)) for p in candidates]
    best = candidates[int(np.argmax(values))]
    a, b = point(best)
    return float(np.sqrt(max(a, 0.0))), float(np.sqrt(max(b, 0.0)))


def irmv_allocation(t: CovarianceTriple, cfg: IrmvConfig, *, basis=None) -> np.ndarray:
    """``L = (sigma/sqrt n) sum_i theta_i L_i`` over the canonical portfolios."""
    dec = canonical_decomposition(t, basis=basis)
    sol = solve_irmv(dec.singular_values, cfg)
    return (cfg.sigma / np.sqrt(t.n)) * dec.combine(sol.theta)
