"""
🚀 Quasi-static simulator of a robot acting on an articulated model.

Includes:

- ⚡ SimWorld
- ⚡ Robot and effector presets
"""

__all__ = ["SimWorld", "robot_preset", "load_robot"]

from .presets import load_robot, robot_preset
from .world import SimWorld
