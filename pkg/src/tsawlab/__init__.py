"""tsawlab: simulation laboratory for the bond-repelling self-avoiding walk.

Subpackages follow the pipeline: exact small-scale oracles (`oracle`), the
walk itself (`walk`), urn discrepancy machinery (`urn`), discrete Ray-Knight
curve extraction (`rayknight`), the coalescing reflected/absorbed Brownian
reference simulator (`tsrm`), distribution comparison tools (`stats`), and
the experiment runner (`experiments`, `cli`).
"""

from .kernels import IMPL as kernel_impl

__version__ = "0.1.0"

__all__ = ["kernel_impl", "__version__"]
