"""Pseudo-spectral laboratory for the higher-dimensional Benjamin-Ono equation."""
from .spectral import (Grid, Multiplier, RealField, SpectralField, apply_multiplier, bessel,
                       d_riesz_beta, forward_transform, fractional, inverse_transform,
                       make_grid, riesz, semigroup)
from .solver import (BlowUpError, SolverConfig, Trajectory, bo1d_soliton, evolve,
                     nonlinearity, step_ifrk4)
from .diagnostics import (DiagnosticsRecord, TruncatedWeight, c_functional, conserved, moment,
                          moment_identity_residual, t_star, truncated_weight, weighted_l2)
from .probes import (ConeParams, ConeProbeReport, CommutatorReport, commutator_probe,
                     cone_probe, f_operator, freq_derivative, identity_suite,
                     stein_derivative, symbol_derivative)

__version__ = "0.1.0"
