"""Exact solving of window mean-payoff and window parity objectives on MDPs."""
from .classification import EcStatus, GoodStrategy, NotAnEc, NotGood, build_good_strategy, classify_bounded, classify_fixed, lambda_safe_region
from .exact import ReachSolution, SingularMatrix, max_reachability, solve_linear_system
from .graph import GameArena, MecDecomposition, attractor, mec_decomposition, prob01_reach
from .io import export_strategy, format_model, import_strategy, parse_model
from .model import (
    BW,
    DFW,
    FW,
    MP,
    PAR,
    KindMismatch,
    MealyStrategy,
    Mdp,
    ModelError,
    Query,
    WindowSpec,
    restrict,
    validate_mdp,
)
from .oracle import Estimate, PartialStrategy, TooLarge, brute_force_value, eval_strategy_exact, monte_carlo
from .solver import UnsoundForCap, Verdict, decide_threshold, solve, solve_bw, solve_dfw, solve_fw
from .unfolding import UnfoldedMdp, lift_strategy, unfold

__version__ = "0.1.0"
