"""Small deterministic neural-network engine: layers, specs, SGD, oracles."""

from .gradcheck import analytic_gradients, grad_check, loss_from_logits
from .model import (Model, ModelSpec, build_model, count_params,
                    load_checkpoint, save_checkpoint)
from .train import (TrainConfig, TrainResult, augment_batch, epochs_to_converge,
                    evaluate, softmax_cross_entropy, train)
from .zoo import (NOMINAL_PARAM_TOTALS, audio_zoo, desk_zoo, get_architecture,
                  image_zoo, zoo_ids)

__all__ = [
    "Model", "ModelSpec", "build_model", "count_params",
    "save_checkpoint", "load_checkpoint",
    "TrainConfig", "TrainResult", "train", "evaluate", "augment_batch",
    "epochs_to_converge", "softmax_cross_entropy",
    "grad_check", "analytic_gradients", "loss_from_logits",
    "image_zoo", "audio_zoo", "desk_zoo", "get_architecture", "zoo_ids",
    "NOMINAL_PARAM_TOTALS",
]
