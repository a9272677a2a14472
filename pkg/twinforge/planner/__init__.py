"""
🚀 Sampling-based trajectory search. The planner dispatches events while it
works, so progress reporting and recording hook in the way callbacks do in any
event-driven client.

Includes:

- ⚡ ICEMPlanner
- ⚡ Planner Events
- ⚡ Rewards, eigengrasps and evaluation suites
"""

__all__ = ["ICEMPlanner", "PlannerEvents", "plan", "evaluate_suite"]

from . import events as PlannerEvents
from .icem import ICEMPlanner, plan
from .suite import evaluate_suite
