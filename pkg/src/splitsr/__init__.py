"""SplitSR: a self-contained single-image super-resolution engine.

Channel-split residual blocks, a hybrid RCAN-derived network, an
analytical cost model, toy-scale training, PSNR/SSIM evaluation, and
an interactive patch-prioritized zoom pipeline with an HTTP service.
"""

from .blocks import BlockKind, BlockParams, block_forward, make_block
from .cost import (CostReport, count, reduction_ghost, reduction_idle,
                   reduction_shuffle, reduction_split)
from .network import Network, NetworkConfig, build, forward, plan_groups, preset
from .tensor import (ConvWeights, ShapeError, Tensor, bicubic_resize,
                     bilinear_resize, channel_shuffle, channel_split, concat_channels,
                     conv2d, pixel_shuffle, relu, vjp)
from .weightio import WeightFileError, load_weights, save_weights
from .zoom import RouteKind, RouteStrategy, ZoomEngine, ZoomRequest, route

__version__ = "0.1.0"
