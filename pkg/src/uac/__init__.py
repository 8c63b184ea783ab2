"""Uniform avoidance couplings of simple random walks on finite graphs.

Decide whether a graph admits a uniform avoidance coupling (UAC) of two
simple random walks, build explicit coupling kernels (fixed-distance,
hypercube flip, automorphism tracking, bipartite, cluster, matching-based),
and verify any joint kernel exactly and statistically.
"""

__version__ = "0.1.0"

from uac.graphs import Graph
from uac.kernels import JointKernel

__all__ = ["Graph", "JointKernel", "__version__"]
