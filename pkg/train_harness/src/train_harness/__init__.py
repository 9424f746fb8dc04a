"""Training and inference harness for LIDAR road-segmentation tensors.

Consumes the featurization tool's outputs purely through its file formats:
the LTNS tensor container and the run manifest.
"""

from .losses import focal_loss
from .models import ModelSpec, build_model, parameter_count
from .tensor_io import read_ltns, write_ltns
from .train import DivergenceError, load_checkpoint, train
from .infer import infer

__version__ = "0.1.0"
