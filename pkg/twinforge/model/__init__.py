"""
🚀 Forward kinematics of articulated models and their URDF form.
"""

__all__ = ["forward_kinematics", "sample_model_points", "to_urdf", "from_urdf", "export_urdf", "load_urdf"]

from .articulated import forward_kinematics, sample_model_points
from .urdf import export_urdf, from_urdf, load_urdf, to_urdf
