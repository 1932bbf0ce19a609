"""hp finite element eigenvalue workbench with auxiliary-subspace a
posteriori error estimates for eigenvalue clusters and invariant
subspaces."""

from . import (assembly, benchmarks, bessel, clusters, eigensolver, errors,
               estimator, fields, geometry, mapping, quadrature, refspace,
               shapes, spaces)

__all__ = [
    "assembly", "benchmarks", "bessel", "clusters", "eigensolver", "errors",
    "estimator", "fields", "geometry", "mapping", "quadrature", "refspace",
    "shapes", "spaces",
]

__version__ = "0.1.0"
