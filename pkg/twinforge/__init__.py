"""
## 🦾 twinforge

Builds articulated twins of everyday objects and plans how a robot
manipulates them.

1. #### Model construction:
Segments movable parts from a few interaction frames, fits a prismatic or
revolute joint per part, recovers the object's pose and metric scale from a
depth view and exports the result as URDF.

2. #### Affordance projection:
Lifts 2D contact pixels and post-contact directions, predicted in a real and a
virtual view, to a 3D contact point and motion direction.

3. #### Planning:
Searches goal-conditioned manipulation trajectories with iCEM model predictive
control inside a quasi-static simulator, with rewards for suction cups,
two-finger grippers and dexterous hands, and eigengrasp-reduced hand actions.

4. #### Synthetic scenes:
Generates ground-truth drawers, cabinets, laptops, lamps, two-door cabinets
and fridges with labeled clouds, depth renders and contacts.
"""

__version__ = "0.1.0"

__all__ = [
    "GenericTypes",
    "ModalTypes",
    "ConfigTypes",
    "ICEMPlanner",
    "SimWorld",
    "PlannerEvents",
    "errors",
    "defaults",
    "Console",
]

from .abc import configs as ConfigTypes
from .abc import generic as GenericTypes
from .abc import modals as ModalTypes
from .core import defaults, errors
from .core.console import Console
from .planner import events as PlannerEvents
from .planner.icem import ICEMPlanner
from .sim.world import SimWorld
