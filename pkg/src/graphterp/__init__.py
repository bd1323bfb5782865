"""graphterp: interpolation of graph signals from partial samples.

Three reconstruction families over undirected weighted graphs:

- exact least-squares projection onto a band-limited subspace (lsr),
- its iterative POCS counterpart with ideal or polynomial filters (ilsr),
- spectral regularization, closed form (rbm) and iterative (irbm),

plus an item-graph collaborative-filtering pipeline and a cross-validation
evaluation harness with a CLI front end.
"""

from .bandlimited import (
    CutoffEstimate,
    IterativeResult,
    SampleSet,
    StoppingRule,
    count_in_band,
    cutoff_frequency,
    ilsr,
    lsr,
)
from .graph import (
    Graph,
    IndexMap,
    NormalizedLaplacian,
    build_graph,
    induce_subgraph,
    knn_sparsify,
    normalized_laplacian,
    read_edge_file,
    write_edge_file,
)
from .evaluate import (
    EvalReport,
    ExperimentConfig,
    FoldSplit,
    kfold_split,
    knn_baseline_predict,
    load_experiment_config,
    normalized_rmse,
    run_experiment,
    run_experiment_file,
)
from .recsys import (
    BilateralConfig,
    PredictionConfig,
    RatingMatrix,
    UserContext,
    UserPrediction,
    bilateral_adjust,
    cosine_item_graph,
    load_ratings,
    predict_user,
    predict_user_methods,
)
from .regularized import RegConfig, default_beta, irbm, rbm_closed_form
from .spectral import (
    ChebyshevFilter,
    EigenBasis,
    SpectralKernel,
    apply_ideal_filter,
    apply_poly_filter,
    chebyshev_coeffs,
    custom_kernel,
    eigendecompose,
    exp_highpass,
    gft,
    ideal_highpass,
    ideal_lowpass,
    igft,
    smoothed_lowpass,
)

__version__ = "0.1.0"
