"""
Events dispatched by the iCEM planner while a trajectory is being planned.

These events can be used to create callbacks for progress reporting,
trajectory recording or early inspection of a long plan.

- `PlanStarted`: Triggered once, before the first step is planned.
- `StepPlanned`: Triggered after every executed step.
- `PlanFinished`: Triggered once, with the finished trajectory.
"""

from __future__ import annotations

__all__ = [
    "BaseEvent",
    "PlanStarted",
    "StepPlanned",
    "PlanFinished",
]

import typing as t

from ..abc.modals import SimState, StepRecord, Trajectory

if t.TYPE_CHECKING:
    from .icem import ICEMPlanner


class BaseEvent:
    """
    Base class of every planner event.

    Parameters
    ----------
    event : str
        A string attached to the event that names it.
    planner : ICEMPlanner
        The planner that dispatched the event.
    """

    def __init__(self, event: str, planner: ICEMPlanner) -> None:
        self._event = event
        self._planner = planner

    @property
    def planner(self) -> ICEMPlanner:
        """
        The planner in the context of the event.

        Returns
        -------
        ICEMPlanner
            The dispatching planner; its `cache` holds everything recorded so far.
        """
        return self._planner

    @property
    def event(self) -> str:
        """
        The event string associated with the dispatched class.

        Returns
        -------
        str
            The event string associated with the dispatched class
        """
        return self._event


class PlanStarted(BaseEvent):
    """
    Event triggered before planning starts.

    Parameters
    ----------
    state : SimState
        The initial simulator state.
    """

    def __init__(self, event: str, planner: ICEMPlanner, state: SimState) -> None:
        self._state = state
        super().__init__(event, planner)

    @property
    def state(self) -> SimState:
        """
        The state the plan starts from.

        Returns
        -------
        SimState
        """
        return self._state


class StepPlanned(BaseEvent):
    """
    Event triggered after a step has been planned and executed.

    Parameters
    ----------
    record : StepRecord
        Executed action, reward breakdown and best elite score.
    state : SimState
        The state after the action.
    elapsed : float
        Wall time spent planning the step, seconds.
    """

    def __init__(
        self, event: str, planner: ICEMPlanner, record: StepRecord, state: SimState, elapsed: float
    ) -> None:
        self._record = record
        self._state = state
        self._elapsed = elapsed
        super().__init__(event, planner)

    @property
    def record(self) -> StepRecord:
        """
        The executed step.

        Returns
        -------
        StepRecord
        """
        return self._record

    @property
    def state(self) -> SimState:
        return self._state

    @property
    def elapsed(self) -> float:
        return self._elapsed


class PlanFinished(BaseEvent):
    """
    Event triggered when planning stops, at success or after the last step.

    Parameters
    ----------
    trajectory : Trajectory
    """

    def __init__(self, event: str, planner: ICEMPlanner, trajectory: Trajectory) -> None:
        self._trajectory = trajectory
        super().__init__(event, planner)

    @property
    def trajectory(self) -> Trajectory:
        """
        The finished trajectory.

        Returns
        -------
        Trajectory
            Executed actions, per-step breakdowns and the final joint error.
        """
        return self._trajectory
