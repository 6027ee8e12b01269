from dissect.avnav.nn.checkpoint import (
    load_checkpoint,
    read_checkpoint,
    save_checkpoint,
    write_checkpoint,
)
from dissect.avnav.nn.layers import (
    CategoricalOutput,
    GaussianOutput,
    GruCache,
    GruParams,
    categorical_head,
    conv1d_backward,
    conv1d_forward,
    conv2d_backward,
    conv2d_forward,
    gaussian_head,
    gru_cell,
    gru_cell_backward,
    linear_backward,
    linear_forward,
    relu_backward,
    relu_forward,
    resample_nearest_backward,
    resample_nearest_forward,
    tconv2d_backward,
    tconv2d_forward,
)
from dissect.avnav.nn.optim import (
    AdamState,
    LinearSchedule,
    adam_step,
    clip_global_norm,
    global_norm,
)

__all__ = [
    "AdamState",
    "CategoricalOutput",
    "GaussianOutput",
    "GruCache",
    "GruParams",
    "LinearSchedule",
    "adam_step",
    "categorical_head",
    "clip_global_norm",
    "conv1d_backward",
    "conv1d_forward",
    "conv2d_backward",
    "conv2d_forward",
    "gaussian_head",
    "global_norm",
    "gru_cell",
    "gru_cell_backward",
    "linear_backward",
    "linear_forward",
    "load_checkpoint",
    "read_checkpoint",
    "relu_backward",
    "relu_forward",
    "resample_nearest_backward",
    "resample_nearest_forward",
    "save_checkpoint",
    "tconv2d_backward",
    "tconv2d_forward",
    "write_checkpoint",
]
