"""Spectral data of coadjoint operators for ideal hydrodynamics.

Subpackages and modules:

* :mod:`coadjoint.algebra` exact polynomial calculus on R^4 and S^3 frame fields
* :mod:`coadjoint.s3basis` the curl eigenfield basis on S^3
* :mod:`coadjoint.spectra` eigenvalue catalogs, Schatten verdicts, non-compactness
* :mod:`coadjoint.torus` Galerkin geodesics, Jacobi operators and conjugate points on T^2
"""

__version__ = "0.1.0"
