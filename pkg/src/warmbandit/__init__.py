"""Bandit learning with possibly biased offline data.

MIN-UCB / MIN-COMB-UCB policies, baselines, closed-form regret bounds and an
experiment harness.
"""
from .bounds import (BoundQuery, bound_report, comb_dep_upper, comb_indep_upper_profile,
                     delta_min_profile, dep_upper_explicit, impossibility_pair, indep_upper_profile,
                     omega, sav0, sav_eps_and_kappa, tau_star_waterfill)
from .comb import (CombInstance, Explicit, Influence, InfluenceGraph, Linear, MPath, OracleSpec,
                   Smooth, TopM, comb_regret, influence_expected_reward, min_comb_ucb_round,
                   oracle_solve)
from .errors import ConfigurationError, ContractViolation, RejectedInputError, WarmBanditError
from .model import (BiasBound, GapProfile, GaussianArmPair, MabInstance, OfflineDataset, gap_profile,
                    sample_offline, validate_bias_bound)
from .policies import (IndexPair, PolicyKind, PolicyState, compute_indices, compute_radii, delta_t,
                       init_policy, policy_update, select_arm, xi_holds)
from .sim import TrialConfig, TrialResult, run_experiment, run_trial

__version__ = "0.1.0"
