"""Galerkin-truncated geodesics, Jacobi operators and conjugate points on the flat 2-torus."""

from .lattice import ScalarState, WaveLattice
from .galerkin import TruncatedOperatorMatrix, ad_matrix, galerkin_rhs, k_matrix
from .geodesic import GeodesicTrajectory, build_lambda, integrate_geodesic
from .scan import conjugate_scan, dexp_fd_oracle, regularized_det
from .chart import ChartSolution, chart_solve

__all__ = [
    "WaveLattice",
    "ScalarState",
    "TruncatedOperatorMatrix",
    "galerkin_rhs",
    "k_matrix",
    "ad_matrix",
    "GeodesicTrajectory",
    "integrate_geodesic",
    "build_lambda",
    "regularized_det",
    "conjugate_scan",
    "dexp_fd_oracle",
    "ChartSolution",
    "chart_solve",
]
