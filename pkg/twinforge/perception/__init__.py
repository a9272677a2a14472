"""
🚀 Model construction from observations.

These include:
- `segmentation` - movable part segmentation over interaction frames.
- `kinematics` - joint fitting and model assembly.
- `alignment` - pose search and metric scale from a depth view.
- `affordance` - 2D affordances lifted to 3D contacts and directions.
- `render` - the depth rasterizer the alignment compares against.
"""

__all__ = [
    "segment_movable_parts",
    "fit_joint",
    "build_model",
    "align_scale",
    "affordance_to_3d",
    "render_depth",
]

from .affordance import affordance_to_3d
from .alignment import align_scale
from .kinematics import build_model, fit_joint
from .render import render_depth
from .segmentation import segment_movable_parts
