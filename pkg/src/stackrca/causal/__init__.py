from .latentvar import FitError, LatentVar, fit_latent_var
from .tcn import TcnAutoencoder, fit_tcn_autoencoder, init_tcn
from .perturb import (
    StrengthSeries,
    causal_strength,
    perturb_segmented,
    strength_matrix,
)
from .transmit import cross_level_causal, joint_scale_strengths, minmax_normalize
from .filtering import (
    CausalEdge,
    CausalEdgeSet,
    CausalTensor,
    conditional_mi,
    filter_causal,
    lead_lag_gate,
)
from .ranking import pagerank_rank, recency_weight

__all__ = [
    "CausalEdge",
    "CausalEdgeSet",
    "CausalTensor",
    "FitError",
    "LatentVar",
    "StrengthSeries",
    "TcnAutoencoder",
    "causal_strength",
    "conditional_mi",
    "cross_level_causal",
    "filter_causal",
    "fit_latent_var",
    "fit_tcn_autoencoder",
    "init_tcn",
    "joint_scale_strengths",
    "lead_lag_gate",
    "minmax_normalize",
    "pagerank_rank",
    "perturb_segmented",
    "recency_weight",
    "strength_matrix",
]
