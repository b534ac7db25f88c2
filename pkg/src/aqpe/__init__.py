"""Adaptive single-qubit phase estimation with trained feedback policies."""
from .baseline import BaselineConfig, BinCount, baseline_variance, count_outcomes, estimate_phase
from .bayes import (FourierPosterior, MeasurementStep, exact_policy_variance, posterior_init,
                    posterior_mean_phase, posterior_sharpness, posterior_update)
from .de import DeParams, de_train
from .evaluate import (EvalConfig, EvalResult, convergence_metric, evaluate_policy,
                       holevo_from_deltas)
from .pso import PsoParams, pso_train
from .rng import RngStream
from .sim import (DecoherenceModel, NoiseChannel, Phase, QubitPrep, fisher_information,
                  measurement_probability, run_episode, sql_bound)

__version__ = "0.1.0"

__all__ = [
    "BaselineConfig", "BinCount", "DeParams", "DecoherenceModel", "EvalConfig", "EvalResult",
    "FourierPosterior", "MeasurementStep", "NoiseChannel", "Phase", "PsoParams", "QubitPrep",
    "RngStream", "baseline_variance", "convergence_metric", "count_outcomes", "de_train",
    "estimate_phase", "evaluate_policy", "exact_policy_variance", "fisher_information",
    "holevo_from_deltas", "measurement_probability", "posterior_init", "posterior_mean_phase",
    "posterior_sharpness", "posterior_update", "pso_train", "run_episode", "sql_bound",
]
