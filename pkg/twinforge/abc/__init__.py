"""
🚀 Data types shared by every component.

Includes:

- generic
    Geometric primitives: transforms, clouds, cameras, depth maps, masks and affordances.
- modals
    Articulated models, segmentation, kinematic estimates and simulator state.
- configs
    JSON-decodable configuration structs.
"""

__all__ = ["generic", "modals", "configs"]

from . import configs, generic, modals
