"""Draft-tree verification for speculative decoding: verifiers, exact oracle, Monte Carlo harness."""

from ._core import (
    Categorical,
    ConfigError,
    Error,
    InvalidSpec,
    ModelPair,
    ModelSpec,
    ParseError,
    RandomSource,
    SampledTree,
    ShapeError,
    TooLarge,
    TreeTemplate,
    ZeroMass,
    expected_acceptance_length,
    losslessness_report,
    normalize,
    parent_acceptance,
    parse_template,
    residual,
    run_monte_carlo,
    sample_tree,
    selftest,
    simulate_csv,
    tv_distance,
    verify,
)

__all__ = [
    "Categorical",
    "ConfigError",
    "Error",
    "InvalidSpec",
    "ModelPair",
    "ModelSpec",
    "ParseError",
    "RandomSource",
    "SampledTree",
    "ShapeError",
    "TooLarge",
    "TreeTemplate",
    "ZeroMass",
    "expected_acceptance_length",
    "losslessness_report",
    "normalize",
    "parent_acceptance",
    "parse_template",
    "residual",
    "run_monte_carlo",
    "sample_tree",
    "selftest",
    "simulate_csv",
    "tv_distance",
    "verify",
]
