"""Portfolio allocation under signal uncertainty: mean-variance, isotropic and isotropy-regularized schemes."""

from .allocators import (
    CanonicalDecomposition,
    PortfolioAllocator,
    allocate,
    canonical_decomposition,
    dual_isotropy_balanced,
    erp_balanced,
    isotropic_mean,
    isotropy_enforced,
    mean_variance,
    principal_portfolio_isotropic,
)
from .irmv_solver import IrmvConfig, Region, ThetaSolution, irmv_allocation, solve_irmv
from .market_model import CovarianceTriple, expected_pnl, pnl_variance, sharpe
from .sector_tf import SectorParams, StrategyKind, build_triple

__all__ = [
    "CanonicalDecomposition",
    "CovarianceTriple",
    "IrmvConfig",
    "PortfolioAllocator",
    "Region",
    "SectorParams",
    "StrategyKind",
    "ThetaSolution",
    "allocate",
    "build_triple",
    "canonical_decomposition",
    "dual_isotropy_balanced",
    "erp_balanced",
    "expected_pnl",
    "irmv_allocation",
    "isotropic_mean",
    "isotropy_enforced",
    "mean_variance",
    "pnl_variance",
    "principal_portfolio_isotropic",
    "sharpe",
    "solve_irmv",
]

__version__ = "0.1.0"
