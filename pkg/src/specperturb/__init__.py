"""Spectral clustering on compressed, incomplete and noisy data, with checkable perturbation bounds."""

__version__ = "0.1.0"

from ._backend import BACKEND  # noqa: E402
from .affinity import AffinityPack, DataMatrix, affinity, gaussian_kernel, normalize_affinity  # noqa: E402
from .bounds import (BoundReport, check_cs_affinity, check_embedding, check_mc_affinity,  # noqa: E402
                     check_sin_theta, check_stewart)
from .completion import (CompletionResult, ObservationMask, PartialMatrix,  # noqa: E402
                         completion_error_bound, sample_mask, soft_impute)
from .embedding import (ClusterAssignment, SpectralEmbedding, cluster_pipeline, kmeans,  # noqa: E402
                        misclassification_rate, spectral_embed)
from .numkernel import SeededRng, svd, sym_eig  # noqa: E402
from .sensing import (MeasurementOperator, RipEstimate, empirical_rip_delta, measure,  # noqa: E402
                      required_measurements)
from .subspace import (SubspaceComparison, canonical_angles, compare, procrustes_align,  # noqa: E402
                       projection_distance)
