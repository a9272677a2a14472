"""
🚀 Ground-truth synthetic articulated scenes.
"""

__all__ = ["CATEGORIES", "generate", "write_scene", "object_model"]

from .generator import generate, write_scene
from .shapes import CATEGORIES, object_model
