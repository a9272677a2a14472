"""
Receding-horizon planning with the improved cross-entropy method.

At every executed step a Gaussian over action sequences of length h is refit
to its best samples for a few iterations; the first action of the best
sequence found is executed and the distribution is shifted one step forward.

- `optimize_sequence`: one step of the sampling search over a batch objective.
- `rollout`: cumulative reward of an action sequence from a snapshot.
- `ActionExpander`: eigengrasp coefficients to hand joint increments.
- `RolloutPool`: scores samples in worker processes.
- `ICEMPlanner` / `plan`: the full planning loop, with events and a cache.
"""

from __future__ import annotations

__all__ = [
    "SearchResult",
    "optimize_sequence",
    "rollout",
    "ActionExpander",
    "RolloutPool",
    "ICEMPlanner",
    "plan",
]

import functools
import math
import multiprocessing
import time
import types
import typing as t

import msgspec
import numpy as np
import numpy.typing as npt

from ..abc.configs import ICEMConfig, PlanSpace, RewardConfig, RobotSpec, SimConfig
from ..abc.modals import ArticulatedModel, EigengraspBasis, RewardBreakdown, SimState, StepRecord, Trajectory
from ..core.console import Console, silent
from ..core.errors import ConfigError
from ..sim.world import SimWorld, restore, snapshot
from .cache import CacheType, InternalCache
from .eigengrasp import project, reconstruct
from .events import BaseEvent, PlanFinished, PlanStarted, StepPlanned
from .noise import powerlaw_noise
from .rewards import reward_for

Objective = t.Callable[[np.ndarray], np.ndarray]
StateReward = t.Callable[[SimState], RewardBreakdown]
Handler = t.Callable[[t.Any], None]


class SearchResult(msgspec.Struct, eq=False):
    """
    Outcome of one step of the sequence search.

    Parameters
    ----------
    best : ndarray
        h×d best sequence seen in any iteration.
    best_score : float
    mean : ndarray
        h×d refit mean after the last iteration.
    elites : ndarray
        E×h×d elites of the last iteration, best first.
    iteration_best : List[float]
        Best score seen up to and including each iteration.
    """

    best: np.ndarray
    best_score: float
    mean: np.ndarray
    elites: np.ndarray
    iteration_best: t.List[float]


def optimize_sequence(
    evaluate: Objective,
    mean: np.ndarray,
    std: np.ndarray,
    lo: np.ndarray,
    hi: np.ndarray,
    cfg: ICEMConfig,
    step: int = 0,
    kept: t.Optional[np.ndarray] = None,
) -> SearchResult:
    """
    Runs `cfg.cem_iterations` iterations of the sampling search.

    Sample i of iteration k draws its colored noise from a generator seeded
    with `(cfg.seed, step, k, i)`, so the result does not depend on how the
    batch is evaluated. A fraction of the elites is carried into the next
    iteration and the mean itself is evaluated in the last one.

    Parameters
    ----------
    evaluate : Callable[[ndarray], ndarray]
        Scores a P×h×d batch of sequences; higher is better.
    mean, std : ndarray
        h×d sampling distribution.
    lo, hi : ndarray
        Per-dimension action bounds.
    cfg : ICEMConfig
    step : int
        Executed step index, part of the noise seed.
    kept : Optional[ndarray]
        Elites shifted over from the previous step.

    Returns
    -------
    SearchResult
    """
    horizon, dim = mean.shape
    population, elite_count = cfg.population, cfg.elites
    keep = int(math.ceil(cfg.elite_shift_fraction * elite_count))
    mean = np.clip(mean, lo, hi)
    std = np.broadcast_to(std, mean.shape).astype(np.float64)

    best = mean.copy()
    best_score = -np.inf
    elites = mean[None].copy()
    iteration_best: t.List[float] = []
    for iteration in range(cfg.cem_iterations):
        noise = np.stack(
            [
                powerlaw_noise(cfg.noise_beta, (dim, horizon), np.random.default_rng([cfg.seed, step, iteration, i])).T
                for i in range(population)
            ]
        )
        samples = np.clip(mean + std * noise, lo, hi)
        if kept is not None and keep > 0:
            carried = kept[: min(keep, population)]
            samples[: len(carried)] = carried
        if iteration == cfg.cem_iterations - 1:
            samples[-1] = mean

        scores = np.asarray(evaluate(samples), dtype=np.float64)
        order = np.argsort(-scores, kind="stable")[:elite_count]
        elites = samples[order]
        if scores[order[0]] > best_score:
            best_score = float(scores[order[0]])
            best = elites[0].copy()
        iteration_best.append(best_score)

        mean = cfg.momentum * mean + (1.0 - cfg.momentum) * elites.mean(axis=0)
        std = cfg.momentum * std + (1.0 - cfg.momentum) * elites.std(axis=0)
        kept = elites
    return SearchResult(best=best, best_score=best_score, mean=mean, elites=elites, iteration_best=iteration_best)


class ActionExpander:
    """
    Maps plan-space actions to robot joint increments.

    In eigengrasp mode an action is the arm increment followed by m
    coefficient increments; the hand moves to the posture reconstructed from
    the projected current posture plus the increments.

    Parameters
    ----------
    robot : RobotSpec
    basis : Optional[EigengraspBasis]
        None for full-joint actions.
    """

    def __init__(self, robot: RobotSpec, basis: t.Optional[EigengraspBasis] = None) -> None:
        self.arm_dof = robot.base_dof
        self.basis = basis
        if basis is not None and basis.dof != robot.effector.hand_dof:
            raise ConfigError(f"basis spans {basis.dof} hand joints, the robot has {robot.effector.hand_dof}")

    def __call__(self, state: SimState, action: np.ndarray) -> np.ndarray:
        if self.basis is None:
            return action
        hand = state.robot_q[self.arm_dof :]
        posture = reconstruct(self.basis, project(self.basis, hand) + action[self.arm_dof :])
        return np.concatenate([action[: self.arm_dof], posture - hand])


def rollout(
    world: SimWorld,
    token: bytes,
    actions: npt.ArrayLike,
    reward_fn: StateReward,
    expand: t.Optional[ActionExpander] = None,
    collision_penalty: t.Optional[float] = None,
) -> t.Tuple[float, t.List[RewardBreakdown]]:
    """
    Cumulative reward of an action sequence started from a snapshot.

    The caller's state is never touched; each call restores its own copy.

    Parameters
    ----------
    world : SimWorld
    token : bytes
        A `snapshot` of the start state.
    actions : ArrayLike
        h×d plan-space actions; an empty sequence scores 0.
    reward_fn : Callable[[SimState], RewardBreakdown]
    expand : Optional[ActionExpander]
    collision_penalty : Optional[float]
        When set, an unexpected collision ends the rollout and this value is
        subtracted from the total. It appears in no breakdown.

    Returns
    -------
    Tuple[float, List[RewardBreakdown]]
    """
    state = restore(token)
    total = 0.0
    breakdowns: t.List[RewardBreakdown] = []
    sequence = np.asarray(actions, dtype=np.float64)
    if sequence.size == 0:
        return total, breakdowns
    for action in sequence.reshape(-1, sequence.shape[-1]):
        increment = action if expand is None else expand(state, action)
        state = world.step(state, increment)
        breakdown = reward_fn(state)
        breakdowns.append(breakdown)
        total += breakdown.total
        if collision_penalty is not None and state.contact.unexpected_collision:
            total -= collision_penalty
            break
    return total, breakdowns


_WORKER: t.Dict[str, t.Any] = {}


def _init_worker(
    model: ArticulatedModel,
    robot: RobotSpec,
    sim_config: SimConfig,
    reward_cfg: RewardConfig,
    basis: t.Optional[EigengraspBasis],
    collision_penalty: t.Optional[float],
) -> None:
    _WORKER.update(
        world=SimWorld(model, robot, sim_config),
        reward=functools.partial(reward_for(reward_cfg), cfg=reward_cfg),
        expand=ActionExpander(robot, basis) if basis is not None else None,
        penalty=collision_penalty,
    )


def _score(token: bytes, actions: np.ndarray) -> float:
    total, _ = rollout(_WORKER["world"], token, actions, _WORKER["reward"], _WORKER["expand"], _WORKER["penalty"])
    return total


class RolloutPool:
    """
    Scores batches of action sequences, in-process or in worker processes.

    Results are ordered by sample index whatever the completion order.

    Parameters
    ----------
    world : SimWorld
    reward_cfg : RewardConfig
    basis : Optional[EigengraspBasis]
    collision_penalty : Optional[float]
    workers : int
        1 evaluates in the calling process.
    """

    def __init__(
        self,
        world: SimWorld,
        reward_cfg: RewardConfig,
        basis: t.Optional[EigengraspBasis] = None,
        collision_penalty: t.Optional[float] = None,
        workers: int = 1,
    ) -> None:
        self.world = world
        self.workers = workers
        self.reward = functools.partial(reward_for(reward_cfg), cfg=reward_cfg)
        self.expand = ActionExpander(world.robot, basis) if basis is not None else None
        self.penalty = collision_penalty
        self._pool: t.Optional[t.Any] = None
        if workers > 1:
            self._pool = multiprocessing.Pool(
                processes=workers,
                initializer=_init_worker,
                initargs=(world.model, world.robot, world.config, reward_cfg, basis, collision_penalty),
            )

    def scores(self, token: bytes, samples: np.ndarray) -> np.ndarray:
        if self._pool is None:
            return np.array(
                [rollout(self.world, token, sample, self.reward, self.expand, self.penalty)[0] for sample in samples]
            )
        chunk = max(1, len(samples) // (4 * self.workers))
        return np.array(self._pool.map(functools.partial(_score, token), list(samples), chunksize=chunk))

    def close(self) -> None:
        if self._pool is not None:
            self._pool.close()
            self._pool.join()
            self._pool = None

    def __enter__(self) -> RolloutPool:
        return self

    def __exit__(
        self,
        exc_type: t.Optional[t.Type[BaseException]],
        exc: t.Optional[BaseException],
        traceback: t.Optional[types.TracebackType],
    ) -> None:
        self.close()


class ICEMPlanner:
    """
    Plans a trajectory that drives one object joint to its target value.

    Parameters
    ----------
    world : SimWorld
        Its target part must be the part of `reward_cfg.target_joint`.
    reward_cfg : RewardConfig
    icem_cfg : ICEMConfig
    space : PlanSpace
        Full joint increments, or arm increments plus eigengrasp coefficients.
    basis : Optional[EigengraspBasis]
        Required in eigengrasp mode, with `basis.m == space.m`.
    console : Console

    Raises
    ------
    ConfigError
        Mismatched target joint, missing or mismatched basis, or action
        bounds of the wrong length.

    Example
    -------
    ```python
    planner = ICEMPlanner(world, RewardConfig.for_effector("gripper", 0.0, 0.08), ICEMConfig.for_effector("gripper"))

    @planner.on_step
    def progress(event: StepPlanned) -> None:
        print(event.record.step, event.record.object_s)

    trajectory = planner.plan(world.initial_state())
    ```
    """

    def __init__(
        self,
        world: SimWorld,
        reward_cfg: RewardConfig,
        icem_cfg: ICEMConfig,
        space: PlanSpace = PlanSpace(),
        basis: t.Optional[EigengraspBasis] = None,
        console: Console = silent,
    ) -> None:
        if reward_cfg.target_joint != world.target_joint:
            raise ConfigError(
                f"reward targets joint {reward_cfg.target_joint}, the simulator tracks joint {world.target_joint}"
            )
        if reward_cfg.effector != world.robot.effector.kind:
            raise ConfigError(f"{reward_cfg.effector} reward for a {world.robot.effector.kind} robot")
        if space.mode == "eigengrasp":
            if basis is None:
                raise ConfigError("eigengrasp actions need a basis")
            if basis.m != space.m:
                raise ConfigError(f"basis keeps {basis.m} eigengrasps, the action space asks for {space.m}")
        self.world = world
        self.reward_cfg = reward_cfg
        self.icem_cfg = icem_cfg
        self.space = space
        self.basis = basis if space.mode == "eigengrasp" else None
        self.console = console
        self.dim = space.dimension(world.robot)
        self.lo, self.hi = icem_cfg.bounds(self.dim)
        self.sigma = icem_cfg.sigma(self.dim)
        self.expand = ActionExpander(world.robot, self.basis)
        self.reward = functools.partial(reward_for(reward_cfg), cfg=reward_cfg)
        self.collision_penalty = reward_cfg.w_collision if reward_cfg.effector == "hand" else None
        self.handlers: t.Dict[t.Type[BaseEvent], t.List[Handler]] = {}
        self.cache = InternalCache()
        self.cache.build_cache()

    def subscribe(self, event_type: t.Type[BaseEvent]) -> t.Callable[[Handler], Handler]:
        """
        Decorator to subscribe a function to planner events.

        Parameters
        ----------
        event_type : Type[BaseEvent]
            The type of event to subscribe to.

        Returns
        -------
        Callable
            The decorated function.

        Example
        -------
        ```python
        @planner.subscribe(PlanFinished)
        def finished(event: PlanFinished):
            print(event.trajectory.success)
        ```
        """

        def decorator(handler_func: Handler) -> Handler:
            self.handlers.setdefault(event_type, []).append(handler_func)
            return handler_func

        return decorator

    def on_step(self, func: t.Callable[[StepPlanned], None]) -> t.Callable[[StepPlanned], None]:
        return self.subscribe(StepPlanned)(func)

    def on_finish(self, func: t.Callable[[PlanFinished], None]) -> t.Callable[[PlanFinished], None]:
        return self.subscribe(PlanFinished)(func)

    def dispatch(self, event: BaseEvent) -> None:
        for handler in self.handlers.get(type(event), []):
            handler(event)

    def _initial_mean(self) -> np.ndarray:
        return np.clip(np.zeros((self.icem_cfg.horizon, self.dim)), self.lo, self.hi)

    def _reached(self, state: SimState) -> bool:
        value = state.object_s[self.reward_cfg.target_joint]
        return abs(self.reward_cfg.s_target - value) < self.reward_cfg.epsilon

    def plan(self, initial: SimState) -> Trajectory:
        """
        Plans and executes up to `horizon_steps` actions from `initial`.

        Success is checked before every step, so a start state already at the
        target returns an empty, successful trajectory.

        Returns
        -------
        Trajectory
            Failure is a valid outcome, reported by `success=False`.
        """
        cfg = self.icem_cfg
        self.cache.reset_cache()
        self.dispatch(PlanStarted("PlanStarted", self, initial))
        joint = self.reward_cfg.target_joint
        mean = self._initial_mean()
        kept: t.Optional[np.ndarray] = None
        state = initial
        actions: t.List[t.List[float]] = []
        steps: t.List[StepRecord] = []
        robot_q = [initial.robot_q.tolist()]
        collision = False

        with RolloutPool(self.world, self.reward_cfg, self.basis, self.collision_penalty, cfg.workers) as pool:
            for index in range(cfg.horizon_steps):
                if self._reached(state):
                    break
                started = time.perf_counter()
                token = snapshot(state)
                result = optimize_sequence(
                    functools.partial(pool.scores, token), mean, self.sigma, self.lo, self.hi, cfg, index, kept
                )
                action = result.best[0]
                state = self.world.step(state, self.expand(state, action))
                breakdown = self.reward(state)
                collision = collision or state.contact.unexpected_collision

                tail = self._initial_mean()[-1:]
                mean = np.concatenate([result.mean[1:], tail])
                shifted = np.broadcast_to(tail, (len(result.elites), 1, self.dim))
                kept = np.concatenate([result.elites[:, 1:], shifted], axis=1)

                elapsed = time.perf_counter() - started
                record = StepRecord(index, action.tolist(), breakdown, state.object_s[joint], result.best_score)
                actions.append(record.action)
                steps.append(record)
                robot_q.append(state.robot_q.tolist())
                self.cache.add_item_to_cache(CacheType.ACTIONS, record.action)
                self.cache.add_item_to_cache(CacheType.BREAKDOWNS, breakdown)
                self.cache.add_item_to_cache(CacheType.STEP_TIMES, elapsed)
                for score in result.iteration_best:
                    self.cache.add_item_to_cache(CacheType.BEST_SCORES, score)
                self.console.log(
                    f"step {index}: s={record.object_s:.4f} target={self.reward_cfg.s_target:.4f} "
                    f"best={result.best_score:.3f} ({elapsed:.2f}s)"
                )
                self.dispatch(StepPlanned("StepPlanned", self, record, state, elapsed))

        trajectory = self._finish(initial, state, actions, steps, robot_q, collision)
        self.console.log(
            f"plan {'succeeded' if trajectory.success else 'failed'} after {trajectory.length} steps, "
            f"delta {trajectory.delta:+.4f}",
            "INFO" if trajectory.success else "WARNING",
        )
        self.dispatch(PlanFinished("PlanFinished", self, trajectory))
        return trajectory

    def _finish(
        self,
        initial: SimState,
        final: SimState,
        actions: t.List[t.List[float]],
        steps: t.List[StepRecord],
        robot_q: t.List[t.List[float]],
        collision: bool,
    ) -> Trajectory:
        joint = self.reward_cfg.target_joint
        s_initial = initial.object_s[joint]
        s_final = final.object_s[joint]
        s_target = self.reward_cfg.s_target
        delta = (s_final - s_initial) - (s_target - s_initial)
        span = s_target - s_initial
        return Trajectory(
            actions=actions,
            steps=steps,
            success=self._reached(final),
            s_initial=s_initial,
            s_target=s_target,
            s_final=s_final,
            delta=delta,
            delta_relative=delta / span * 100.0 if span != 0 else 0.0,
            robot_q=robot_q,
            collision=collision,
        )


def plan(
    sim_initial: SimState,
    model: ArticulatedModel,
    robot: RobotSpec,
    reward_cfg: RewardConfig,
    icem_cfg: ICEMConfig,
    space: PlanSpace = PlanSpace(),
    basis: t.Optional[EigengraspBasis] = None,
    sim_config: t.Optional[SimConfig] = None,
    console: Console = silent,
) -> Trajectory:
    """
    One-shot form of `ICEMPlanner.plan`.

    The simulator targets the part of `reward_cfg.target_joint` unless
    `sim_config` says otherwise.
    """
    config = sim_config or SimConfig(target_part=reward_cfg.target_joint + 1, psi=reward_cfg.psi)
    world = SimWorld(model, robot, config, console)
    return ICEMPlanner(world, reward_cfg, icem_cfg, space, basis, console).plan(sim_initial)
