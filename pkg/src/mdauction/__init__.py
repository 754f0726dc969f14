"""Revenue-optimal auctions of one object with several quality grades.

The optimal symmetric mechanism on a discretized type space is found by a
cutting-plane method over incentive and Border feasibility constraints, and
compared with the best exclusive buyer mechanism.
"""
from __future__ import annotations

from .backend import Infeasible, IterationLimit, LPError, Unbounded, lp_solve
from .ebm import (
    EbmOutcome,
    PriceMenu,
    ebm_revenue_closed_form,
    ebm_revenue_exact,
    ebm_revenue_mc,
    myerson_oracle,
    optimize_ebm,
)
from .harness import ExperimentConfig, RunReport, emit_heatmap, load_config, parse_config, run_experiment
from .lpmodel import AuctionSetting
from .solver import MechanismSolution, SolverConfig, exclusion_region, solve_all_constraints, solve_optimal_auction
from .typespace import (
    Beta,
    Box,
    Mixture,
    Product,
    TableDensity,
    TruncNormal,
    Uniform,
    build_grid,
    discretize_density,
)

__version__ = "0.1.0"

__all__ = [
    "AuctionSetting", "Beta", "Box", "EbmOutcome", "ExperimentConfig", "Infeasible", "IterationLimit",
    "LPError", "MechanismSolution", "Mixture", "PriceMenu", "Product", "RunReport", "SolverConfig",
    "TableDensity", "TruncNormal", "Unbounded", "Uniform", "build_grid", "discretize_density",
    "ebm_revenue_closed_form", "ebm_revenue_exact", "ebm_revenue_mc", "emit_heatmap", "exclusion_region",
    "load_config", "lp_solve", "myerson_oracle", "optimize_ebm", "parse_config", "run_experiment",
    "solve_all_constraints", "solve_optimal_auction",
]
