"""Semiclassical spectra of Schrodinger operators with piecewise-linear complex potentials."""

from .airy import RotationIndex, ai, ai_prime, ai_rotated, is_allowable, log_ai_asymptotic, sector_of
from .determinant import BasisChoice, ScaledDeterminant, assemble_matrix, chardet, choose_basis
from .discrete import DiscreteOperator, discretize, eig_all, pseudospectra_grid, sigma_min
from .errors import NumericalError, SpectralError, ValidationError
from .potential import PiecewiseLinearPotential, Segment, build_potential, figure3, jump, linear, segment_frame
from .solver import (EigenvalueSet, SearchRegion, conjugate_pairing, containment_report, limit_experiment,
                     solve_spectrum, winding_count)
from .stokes import SpectralSkeleton, YFigure, distance_to_skeleton, gamma_point, skeleton, y_figure

__version__ = "0.1.0"
