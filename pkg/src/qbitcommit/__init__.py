"""Simulation of a noisy single-photon quantum bit commitment protocol."""

from .adversary import (
    AttackModel,
    cheating_cond_probs,
    discrimination_basis,
    helstrom_error,
    optimal_added_noise,
)
from .channels import ConditionalProbs, NoiseParams, closed_form_cond_probs, numeric_cond_probs
from .link import LinkParams, dark_count_correction
from .protocol import Honest, ProtocolConfig, SessionTranscript, run_session
from .quantum import DensityMatrix, KrausChannel, PureState, ValidationError
from .verifier import Thresholds, Verdict, accept_test, solve_pd_delta_star, solve_pd_star, verify_transcript

__all__ = [
    "AttackModel",
    "ConditionalProbs",
    "DensityMatrix",
    "Honest",
    "KrausChannel",
    "LinkParams",
    "NoiseParams",
    "ProtocolConfig",
    "PureState",
    "SessionTranscript",
    "Thresholds",
    "ValidationError",
    "Verdict",
    "accept_test",
    "cheating_cond_probs",
    "closed_form_cond_probs",
    "dark_count_correction",
    "discrimination_basis",
    "helstrom_error",
    "numeric_cond_probs",
    "optimal_added_noise",
    "run_session",
    "solve_pd_delta_star",
    "solve_pd_star",
    "verify_transcript",
]

__version__ = "0.1.0"
