"""Black-box restarting reduction for non-stationary bandits and RL."""

from .base import GlmUcb, Oful, QUcb, Ucb1, fork_fresh, glm_solve, restore
from .envs import (
    EnvSpecError,
    NonstatSummary,
    load_env,
    make_env,
    nonstat_summary,
    optimal_value,
    sample_reward,
)
from .harness import baseline_run, run_experiment, run_single, seed_derive
from .malg import MalgRunner, rho_hat, schedule_upfront, spawn_probability
from .master import RunLog, dynamic_regret, run_bare, run_master, test1_fails, test2_fails
from .mdp import (
    Exp3P,
    UcrlAcw,
    borl,
    compute_diameter,
    doubling_dbar,
    evi,
    nbar,
    optimal_gain,
    rho_ucrl,
    run_master_ucrl,
    widen_to_span,
)
from .rates import RateFunction, glm_rate, oful_rate, qucb_rate, ucb1_rate, ucrl_rate

__version__ = "0.1.0"

__all__ = [
    "EnvSpecError",
    "Exp3P",
    "GlmUcb",
    "MalgRunner",
    "NonstatSummary",
    "Oful",
    "QUcb",
    "RateFunction",
    "RunLog",
    "Ucb1",
    "UcrlAcw",
    "baseline_run",
    "borl",
    "compute_diameter",
    "doubling_dbar",
    "dynamic_regret",
    "evi",
    "fork_fresh",
    "glm_rate",
    "glm_solve",
    "load_env",
    "make_env",
    "nbar",
    "nonstat_summary",
    "oful_rate",
    "optimal_gain",
    "optimal_value",
    "qucb_rate",
    "restore",
    "rho_hat",
    "rho_ucrl",
    "run_bare",
    "run_experiment",
    "run_master",
    "run_master_ucrl",
    "run_single",
    "sample_reward",
    "schedule_upfront",
    "seed_derive",
    "spawn_probability",
    "test1_fails",
    "test2_fails",
    "ucb1_rate",
    "ucrl_rate",
    "widen_to_span",
]
