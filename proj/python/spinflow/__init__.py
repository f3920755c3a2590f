"""Spin transport on a two-leg hard-core-boson ladder."""

from ._core import (
    ConvergenceError,
    DimensionError,
    FitError,
    LadderSpec,
    PowerLawFit,
    __version__,
    classify_transport,
    derive_seed,
    device_ladder,
    domain_wall_state,
    evolve,
    exact_autocorrelation,
    fit_power_law,
    generate_haar_state,
    haar_entropy_target,
    haar_reference_state,
    ks_critical_value,
    ladder_preset,
    measure_autocorrelation,
    participation_entropy,
    porter_thomas_ks,
    run_experiment,
    sample_disorder,
    tilt_potential,
    trajectory_particle_number,
    uniform_ladder,
)

__all__ = [name for name in dir() if not name.startswith("_")]
