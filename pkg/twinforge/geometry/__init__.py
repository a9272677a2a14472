"""
🚀 Point clouds, pinhole cameras and the on-disk formats.

Includes:

- `cloud` - nearest neighbors, chamfer distance and rigid registration.
- `camera` - projection, back-projection and camera builders.
- `fileio` - readers and writers of clouds, depth maps, masks, cameras, meshes and JSON sidecars.
"""

__all__ = ["camera", "cloud", "fileio"]

from . import camera, cloud, fileio
