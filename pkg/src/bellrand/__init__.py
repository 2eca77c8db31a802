"""Certified randomness from CHSH-type Bell tests on noisy two-qubit states."""
from .bell import Behavior, BellExpression, SettingsDistribution, chsh_expression, evaluate_bell, is_local_2222
from .guessing import CertifiedResult, Mode, ProgramSpec, certify, verify_certificate
from .pipeline import certify_cases, certify_point
from .quantum import behavior_from_model, dephasing_model, noise_model, white_noise_model

__all__ = [
    "Behavior",
    "BellExpression",
    "CertifiedResult",
    "Mode",
    "ProgramSpec",
    "SettingsDistribution",
    "behavior_from_model",
    "certify",
    "certify_cases",
    "certify_point",
    "chsh_expression",
    "dephasing_model",
    "evaluate_bell",
    "is_local_2222",
    "noise_model",
    "verify_certificate",
    "white_noise_model",
]
