"""Chart-location beamforming experiments.

Synthesizes multipath MIMO-OFDM channels over a deterministic street
canyon, learns a low-dimensional channel chart without labels, trains a
random-Fourier-feature beamformer on chart coordinates, and compares the
five standard experiment variants end to end.
"""

from .beamform import EvalReport, Precoder, complexify_normalize, eta, spectral_efficiency
from .chart import (
    Chart,
    DistanceMatrix,
    NeighborGraph,
    classical_mds,
    geodesic_distances,
    isomap,
    knn_graph,
    oos_embed,
    oos_embed_batch,
    pairwise_distances,
    pi_distance,
)
from .nn import LBBModel, adam_step, build_model, correlation_loss, rff_forward, rff_init, train
from .pipeline import RunConfig, VARIANTS, compare, default_config, run_variant, split
from .scene import (
    ChannelVector,
    Dataset,
    PathSet,
    SceneConfig,
    default_scene,
    generate_dataset,
    steering_vector,
    synthesize_channel,
    trace_paths,
)

__version__ = "0.1.0"
