"""camkit: class-activation-map attribution with Shapley-grounded scoring.

The package decomposes a small CNN at a chosen layer into a frontend
(image -> activation stack) and a head (stack -> logits), computes
per-channel importance coefficients by several CAM methods, assembles
saliency maps from them, and measures their faithfulness.  Hot spatial
kernels run under numba with a pure-numpy fallback (``CAMKIT_BACKEND``).
"""

from .backend import BACKEND
from .graph import (
    LAYER_KINDS,
    HeadTrace,
    LayerSpec,
    ModelGraph,
    build_head_trace,
    forward_full,
    forward_head,
    mask_apply,
    run_layers,
)
from .heatmap import colormap, overlay, write_overlay, write_pgm, write_ppm
from .methods import (
    CoefficientVector,
    ExplanationMap,
    ablation_cam,
    assemble_map,
    grad_cam,
    grad_cam_pp,
    lift_cam,
    score_cam,
    xgrad_cam,
)
from .metrics import (
    BoundingBox,
    EvalSample,
    MetricReport,
    SampleRecord,
    cosine_similarity,
    explanation_image,
    ic_ad_add,
    insertion_deletion_auc,
    inverted_explanation_image,
    pointing_game,
    threshold_mask,
)
from .modelio import (
    FormatError,
    load_model,
    load_sample,
    load_tensor,
    load_tensors,
    save_model,
    save_sample,
    save_tensor,
    save_tensors,
)
from .propagation import backward_head_gradient, deeplift_head, head_delta
from .shapley import (
    EXACT_CHANNEL_CAP,
    OrderingSet,
    SubsetValueCache,
    exact_shapley,
    shap_cam,
)
from .synthetic import (
    HEAD_KINDS,
    generate_synthetic_image,
    generate_synthetic_model,
    generate_synthetic_sample,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "LAYER_KINDS",
    "HeadTrace",
    "LayerSpec",
    "ModelGraph",
    "build_head_trace",
    "forward_full",
    "forward_head",
    "mask_apply",
    "run_layers",
    "colormap",
    "overlay",
    "write_overlay",
    "write_pgm",
    "write_ppm",
    "CoefficientVector",
    "ExplanationMap",
    "ablation_cam",
    "assemble_map",
    "grad_cam",
    "grad_cam_pp",
    "lift_cam",
    "score_cam",
    "xgrad_cam",
    "BoundingBox",
    "EvalSample",
    "MetricReport",
    "SampleRecord",
    "cosine_similarity",
    "explanation_image",
    "ic_ad_add",
    "insertion_deletion_auc",
    "inverted_explanation_image",
    "pointing_game",
    "threshold_mask",
    "FormatError",
    "load_model",
    "load_sample",
    "load_tensor",
    "load_tensors",
    "save_model",
    "save_sample",
    "save_tensor",
    "save_tensors",
    "backward_head_gradient",
    "deeplift_head",
    "head_delta",
    "EXACT_CHANNEL_CAP",
    "OrderingSet",
    "SubsetValueCache",
    "exact_shapley",
    "shap_cam",
    "HEAD_KINDS",
    "generate_synthetic_image",
    "generate_synthetic_model",
    "generate_synthetic_sample",
]
