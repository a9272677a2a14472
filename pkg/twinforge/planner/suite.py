"""
Evaluation suites: every task planned once per seed, aggregated into a
metrics table.

Classes
-------
- `TaskResult`: One planned run.
- `SuiteMetrics`: Aggregates of one task over all seeds.
- `SuiteReport`: Every run plus the per-task aggregates.
"""

from __future__ import annotations

__all__ = [
    "TaskResult",
    "PreparedTask",
    "SuiteMetrics",
    "SuiteReport",
    "prepare_task",
    "run_task",
    "evaluate_suite",
    "evaluate_spec",
    "ablation_tasks",
    "eigengrasp_sweep",
    "hand_jerk",
    "write_metrics_csv",
]

import csv
import pathlib
import typing as t

import msgspec
import numpy as np

from ..abc.configs import (
    REWARD_TERMS,
    GlobalConfig,
    ICEMConfig,
    PlanSpace,
    RewardConfig,
    RobotSpec,
    SceneRecipe,
    SimConfig,
    SuiteSpec,
    SuiteTask,
)
from ..abc.modals import ArticulatedModel, EigengraspBasis, Trajectory
from ..core.console import Console, silent
from ..core.errors import ConfigError, TwinforgeError
from ..model.urdf import load_urdf
from ..sim.presets import home_configuration, load_robot
from ..sim.world import SimWorld
from ..synthgen.shapes import object_model
from .eigengrasp import fit_pca, read_basis, synth_grasp_dataset
from .icem import ICEMPlanner

PathLike = t.Union[str, pathlib.Path]

SWEEP_DIMENSIONS = (1, 2, 7, 16)
GRASP_SAMPLES = 2000


class TaskResult(msgspec.Struct, frozen=True):
    """
    Outcome of one task under one seed. A run that could not be set up
    carries its error as `"<ErrorName>: message"` and zero metrics.
    """

    task: str
    seed: int
    success: bool = False
    steps: int = 0
    delta: float = 0.0
    delta_relative: float = 0.0
    time_per_step: float = 0.0
    mean_abs_action: float = 0.0
    jerk: float = 0.0
    collision: bool = False
    error: t.Optional[str] = None


class SuiteMetrics(msgspec.Struct, frozen=True):
    """
    Aggregates of one task.

    Parameters
    ----------
    runs : int
        Seeds that planned without error.
    success_rate : float
        Successful runs over `runs`; 0 when nothing ran.
    steps_to_success : Optional[float]
        Mean trajectory length of the successful runs.
    mean_abs_delta, mean_abs_delta_relative : float
        Means of |δ| and |δ_r| over the runs.
    time_per_step : float
        Mean wall time per planned step, seconds.
    mean_abs_action, jerk : float
    errors : int
        Seeds that failed to set up.
    """

    task: str
    runs: int
    success_rate: float
    steps_to_success: t.Optional[float]
    mean_abs_delta: float
    mean_abs_delta_relative: float
    time_per_step: float
    mean_abs_action: float
    jerk: float
    errors: int


class SuiteReport(msgspec.Struct, frozen=True):
    results: t.List[TaskResult]
    metrics: t.List[SuiteMetrics]

    def metric(self, task: str) -> SuiteMetrics:
        for row in self.metrics:
            if row.task == task:
                return row
        raise KeyError(task)


class PreparedTask(msgspec.Struct, eq=False):
    """
    Everything `run_task` needs to plan one task.
    """

    model: ArticulatedModel
    robot: RobotSpec
    reward: RewardConfig
    icem: ICEMConfig
    sim: SimConfig
    space: PlanSpace
    basis: t.Optional[EigengraspBasis]
    robot_q: np.ndarray
    object_s: np.ndarray


def _task_model(task: SuiteTask) -> ArticulatedModel:
    if task.model is not None:
        return load_urdf(task.model)
    if task.category is not None:
        return object_model(SceneRecipe(task.category))  # type: ignore[arg-type]
    raise ConfigError(f"task {task.name!r} names neither a model nor a category")


def _task_basis(
    task: SuiteTask, robot: RobotSpec, bases: t.Dict[t.Tuple[str, int], EigengraspBasis]
) -> t.Optional[EigengraspBasis]:
    if task.basis is not None:
        return read_basis(task.basis)
    if task.eigengrasp_dim is None:
        return None
    key = (robot.name, task.eigengrasp_dim)
    if key not in bases:
        data = synth_grasp_dataset(robot.effector, GRASP_SAMPLES, seed=0)
        bases[key] = fit_pca(data, task.eigengrasp_dim)
    return bases[key]


def prepare_task(
    task: SuiteTask, bases: t.Optional[t.Dict[t.Tuple[str, int], EigengraspBasis]] = None
) -> PreparedTask:
    """
    Resolves model, robot, configs and start state of a task.

    The target joint starts at `initial_value` (its lower limit when unset)
    and every other joint at its rest value.

    Raises
    ------
    ConfigError
        No goal, no object, or a robot whose effector differs from the task's.
    TwinforgeError
        Any error raised while loading the model, robot or basis.
    """
    model = _task_model(task)
    if not 0 <= task.target_joint < model.dof:
        raise ConfigError(f"task {task.name!r}: target joint {task.target_joint} of a {model.dof}-joint model")
    joint = model.joint(task.target_joint)
    robot = load_robot(task.robot or task.effector)
    if robot.effector.kind != task.effector:
        raise ConfigError(f"task {task.name!r}: {task.effector} task on a {robot.effector.kind} robot")

    object_s = model.rest_state().values.copy()
    s_initial = joint.lower if task.initial_value is None else task.initial_value
    object_s[task.target_joint] = s_initial
    if task.target_value is not None:
        s_target = task.target_value
    elif task.target_delta is not None:
        s_target = s_initial + task.target_delta
    else:
        raise ConfigError(f"task {task.name!r} needs target_value or target_delta")

    reward = RewardConfig.for_effector(
        task.effector,
        s_initial,
        s_target,
        target_joint=task.target_joint,
        joint_kind=joint.kind,
        disabled_terms=list(task.disabled_terms),
    )
    basis = _task_basis(task, robot, bases if bases is not None else {})
    space = PlanSpace("eigengrasp", basis.m) if basis is not None else PlanSpace()
    return PreparedTask(
        model=model,
        robot=robot,
        reward=reward,
        icem=task.icem or ICEMConfig.for_effector(task.effector),
        sim=task.sim or SimConfig(target_part=task.target_joint + 1, psi=reward.psi),
        space=space,
        basis=basis,
        robot_q=np.asarray(task.robot_q, dtype=np.float64) if task.robot_q is not None else home_configuration(robot),
        object_s=object_s,
    )


def hand_jerk(trajectory: Trajectory, robot: RobotSpec) -> float:
    """
    Mean absolute third difference of the hand joint positions; every joint
    counts when the effector has no hand joints. 0 below four configurations.
    """
    q = np.asarray(trajectory.robot_q, dtype=np.float64)
    if q.shape[0] < 4:
        return 0.0
    hand = q[:, robot.base_dof :] if robot.effector.hand_dof else q
    return float(np.mean(np.abs(np.diff(hand, n=3, axis=0))))


def run_task(
    task: SuiteTask,
    seed: int,
    workers: int = 1,
    bases: t.Optional[t.Dict[t.Tuple[str, int], EigengraspBasis]] = None,
    console: Console = silent,
) -> t.Tuple[TaskResult, t.Optional[Trajectory]]:
    """
    Plans one task under one seed.

    Errors raised while setting the task up or planning it are recorded in the
    result instead of propagating.
    """
    try:
        prepared = prepare_task(task, bases)
        icem = msgspec.structs.replace(prepared.icem, seed=seed, workers=workers)
        world = SimWorld(prepared.model, prepared.robot, prepared.sim, console)
        planner = ICEMPlanner(world, prepared.reward, icem, prepared.space, prepared.basis, console)
        trajectory = planner.plan(world.initial_state(prepared.robot_q, prepared.object_s))
    except (TwinforgeError, OSError) as exc:
        message = f"{type(exc).__name__}: {exc}"
        console.error(f"{task.name} seed {seed}: {message}")
        return TaskResult(task.name, seed, error=message), None

    times = planner.cache.get_step_times() or []
    actions = np.asarray(trajectory.actions, dtype=np.float64)
    result = TaskResult(
        task=task.name,
        seed=seed,
        success=trajectory.success,
        steps=trajectory.length,
        delta=trajectory.delta,
        delta_relative=trajectory.delta_relative,
        time_per_step=float(np.mean(times)) if times else 0.0,
        mean_abs_action=float(np.mean(np.abs(actions))) if actions.size else 0.0,
        jerk=hand_jerk(trajectory, prepared.robot),
        collision=trajectory.collision,
    )
    return result, trajectory


def _aggregate(task: str, results: t.Sequence[TaskResult]) -> SuiteMetrics:
    ran = [r for r in results if r.error is None]
    wins = [r for r in ran if r.success]

    def mean(values: t.Iterable[float]) -> float:
        array = np.fromiter(values, dtype=np.float64)
        return float(array.mean()) if array.size else 0.0

    return SuiteMetrics(
        task=task,
        runs=len(ran),
        success_rate=len(wins) / len(ran) if ran else 0.0,
        steps_to_success=mean(r.steps for r in wins) if wins else None,
        mean_abs_delta=mean(abs(r.delta) for r in ran),
        mean_abs_delta_relative=mean(abs(r.delta_relative) for r in ran),
        time_per_step=mean(r.time_per_step for r in ran),
        mean_abs_action=mean(r.mean_abs_action for r in ran),
        jerk=mean(r.jerk for r in ran),
        errors=len(results) - len(ran),
    )


def evaluate_suite(
    tasks: t.Sequence[SuiteTask],
    seeds: t.Sequence[int],
    cfg: GlobalConfig = GlobalConfig(),
    console: Console = silent,
) -> SuiteReport:
    """
    Plans every task under every seed, in order.

    Parameters
    ----------
    tasks : Sequence[SuiteTask]
    seeds : Sequence[int]
        Each seed replaces the task's `ICEMConfig.seed`.
    cfg : GlobalConfig
        Its worker count sizes every rollout pool.
    console : Console

    Returns
    -------
    SuiteReport
        Per-run results in (task, seed) order and one metrics row per task.

    Example
    -------
    ```python
    task = SuiteTask("drawer", "gripper", category="drawer", target_delta=0.08)
    report = evaluate_suite([task], seeds=range(3))
    report.metric("drawer").success_rate
    ```
    """
    bases: t.Dict[t.Tuple[str, int], EigengraspBasis] = {}
    results: t.List[TaskResult] = []
    metrics: t.List[SuiteMetrics] = []
    for task in tasks:
        rows = [run_task(task, seed, cfg.workers, bases, console)[0] for seed in seeds]
        summary = _aggregate(task.name, rows)
        console.log(
            f"{task.name}: success {summary.success_rate:.0%} over {summary.runs} runs, "
            f"|delta| {summary.mean_abs_delta:.4f}, {summary.time_per_step:.2f}s/step"
        )
        results.extend(rows)
        metrics.append(summary)
    return SuiteReport(results, metrics)


def evaluate_spec(spec: SuiteSpec, cfg: GlobalConfig = GlobalConfig(), console: Console = silent) -> SuiteReport:
    return evaluate_suite(spec.tasks, spec.seeds, cfg, console)


def ablation_tasks(task: SuiteTask, terms: t.Optional[t.Sequence[str]] = None) -> t.List[SuiteTask]:
    """
    The task itself plus one copy per reward term with that term disabled,
    named `<task>-no-<term>`.
    """
    chosen = list(terms) if terms is not None else list(REWARD_TERMS)
    unknown = set(chosen) - set(REWARD_TERMS)
    if unknown:
        raise ConfigError(f"unknown reward terms: {sorted(unknown)}")
    return [task] + [
        msgspec.structs.replace(task, name=f"{task.name}-no-{term}", disabled_terms=[*task.disabled_terms, term])
        for term in chosen
    ]


def eigengrasp_sweep(task: SuiteTask, dims: t.Sequence[int] = SWEEP_DIMENSIONS) -> t.List[SuiteTask]:
    """
    One copy of a hand task per eigengrasp dimension, named `<task>-m<m>`.
    """
    if task.effector != "hand":
        raise ConfigError("an eigengrasp sweep needs a hand task")
    return [msgspec.structs.replace(task, name=f"{task.name}-m{m}", eigengrasp_dim=m, basis=None) for m in dims]


METRIC_FIELDS = list(SuiteMetrics.__struct_fields__)


def write_metrics_csv(path: PathLike, metrics: t.Sequence[SuiteMetrics]) -> None:
    """
    One row per task; an unset `steps_to_success` is an empty cell.
    """
    target = pathlib.Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with target.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=METRIC_FIELDS, lineterminator="\n")
        writer.writeheader()
        for row in metrics:
            values = msgspec.structs.asdict(row)
            writer.writerow({k: "" if v is None else v for k, v in values.items()})
