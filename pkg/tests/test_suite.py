from __future__ import annotations

import csv

import pytest

from twinforge.abc.configs import REWARD_TERMS, ICEMConfig, SuiteSpec, SuiteTask
from twinforge.abc.modals import RewardBreakdown, Trajectory
from twinforge.core.errors import ConfigError
from twinforge.planner.suite import (
    METRIC_FIELDS,
    SuiteMetrics,
    ablation_tasks,
    eigengrasp_sweep,
    evaluate_spec,
    evaluate_suite,
    hand_jerk,
    prepare_task,
    run_task,
    write_metrics_csv,
)
from twinforge.sim.presets import home_configuration, robot_preset

DRAWER = SuiteTask("drawer", "gripper", category="drawer", target_delta=0.08)
AT_GOAL = SuiteTask("idle", "gripper", category="drawer", initial_value=0.05, target_value=0.05)


def _trajectory(robot_q) -> Trajectory:
    return Trajectory([], [], False, 0.0, 0.1, 0.0, -0.1, -100.0, robot_q=robot_q)


def test_prepare_task():
    prepared = prepare_task(DRAWER)
    assert prepared.reward.effector == "gripper"
    assert (prepared.reward.s_initial, prepared.reward.s_target) == (0.0, 0.08)
    assert prepared.icem.population == 400
    assert prepared.sim.target_part == 1
    assert prepared.space.mode == "full"
    assert prepared.basis is None
    assert prepared.robot_q.tolist() == home_configuration(robot_preset("gripper")).tolist()
    assert prepared.object_s.tolist() == [0.0]


def test_prepared_task_overrides():
    task = SuiteTask(
        "door",
        "suction",
        category="cabinet",
        initial_value=0.3,
        target_delta=0.4,
        icem=ICEMConfig(horizon_steps=5),
        disabled_terms=["r_dir"],
    )
    prepared = prepare_task(task)
    assert prepared.object_s.tolist() == [0.3]
    assert prepared.reward.s_target == pytest.approx(0.7)
    assert prepared.reward.epsilon == 0.02
    assert prepared.reward.disabled_terms == ["r_dir"]
    assert prepared.icem.horizon_steps == 5


def test_hand_tasks_share_fitted_bases():
    bases = {}
    task = SuiteTask("hand", "hand", category="drawer", target_delta=0.05, eigengrasp_dim=2)
    first = prepare_task(task, bases)
    second = prepare_task(task, bases)
    assert first.space.mode == "eigengrasp"
    assert first.space.m == 2
    assert list(bases) == [("hand", 2)]
    assert first.basis is second.basis


@pytest.mark.parametrize(
    ("task", "message"),
    [
        (SuiteTask("nothing", "gripper", target_delta=0.1), "neither a model nor a category"),
        (SuiteTask("goalless", "gripper", category="drawer"), "needs target_value or target_delta"),
        (SuiteTask("far", "gripper", category="drawer", target_joint=1, target_delta=0.1), "target joint 1"),
        (SuiteTask("mixed", "gripper", category="drawer", robot="suction", target_delta=0.1), "on a suction robot"),
    ],
)
def test_prepare_errors(task, message):
    with pytest.raises(ConfigError, match=message):
        prepare_task(task)


def test_run_task_records_errors():
    result, trajectory = run_task(SuiteTask("goalless", "gripper", category="drawer"), seed=3)
    assert trajectory is None
    assert result.seed == 3
    assert result.error.startswith("ConfigError: ")
    assert not result.success


def test_missing_model_file_is_recorded(tmp_path):
    task = SuiteTask("ghost", "gripper", model=str(tmp_path / "ghost.urdf"), target_delta=0.1)
    result, _ = run_task(task, seed=0)
    assert result.error is not None


def test_evaluate_suite():
    broken = SuiteTask("goalless", "gripper", category="drawer")
    report = evaluate_suite([AT_GOAL, broken], seeds=[0, 1])
    assert [(r.task, r.seed) for r in report.results] == [("idle", 0), ("idle", 1), ("goalless", 0), ("goalless", 1)]

    idle = report.metric("idle")
    assert idle.runs == 2
    assert idle.success_rate == 1.0
    assert idle.steps_to_success == 0.0
    assert idle.mean_abs_delta == 0.0
    assert idle.errors == 0

    failed = report.metric("goalless")
    assert failed.runs == 0
    assert failed.success_rate == 0.0
    assert failed.steps_to_success is None
    assert failed.errors == 2
    with pytest.raises(KeyError):
        report.metric("unknown")


def test_evaluate_spec():
    report = evaluate_spec(SuiteSpec([AT_GOAL], seeds=[4]))
    assert report.results[0].seed == 4
    assert report.results[0].success


def test_ablation_tasks():
    tasks = ablation_tasks(DRAWER)
    assert [task.name for task in tasks] == ["drawer"] + [f"drawer-no-{term}" for term in REWARD_TERMS]
    assert tasks[2].disabled_terms == ["r_target"]
    assert ablation_tasks(DRAWER, ["r_dist"])[1].name == "drawer-no-r_dist"
    with pytest.raises(ConfigError):
        ablation_tasks(DRAWER, ["r_luck"])


def test_eigengrasp_sweep():
    hand = SuiteTask("hand", "hand", category="drawer", target_delta=0.05, basis="old.json")
    tasks = eigengrasp_sweep(hand)
    assert [task.name for task in tasks] == ["hand-m1", "hand-m2", "hand-m7", "hand-m16"]
    assert [task.eigengrasp_dim for task in tasks] == [1, 2, 7, 16]
    assert all(task.basis is None for task in tasks)
    with pytest.raises(ConfigError):
        eigengrasp_sweep(DRAWER)


def test_hand_jerk():
    robot = robot_preset("free_gripper")
    cubic = [[0.0] * 6 + [float(i) ** 3] for i in range(5)]
    assert hand_jerk(_trajectory(cubic), robot) == pytest.approx(6.0)
    assert hand_jerk(_trajectory(cubic[:3]), robot) == 0.0
    suction = robot_preset("free_suction")
    assert hand_jerk(_trajectory([[float(i) ** 3] * 6 for i in range(4)]), suction) == pytest.approx(6.0)


def test_metrics_csv(tmp_path):
    rows = [
        SuiteMetrics("a", 2, 0.5, 12.0, 0.01, 5.0, 0.3, 0.02, 0.0, 0),
        SuiteMetrics("b", 0, 0.0, None, 0.0, 0.0, 0.0, 0.0, 0.0, 3),
    ]
    path = tmp_path / "out" / "metrics.csv"
    write_metrics_csv(path, rows)
    with path.open(newline="") as handle:
        table = list(csv.DictReader(handle))
    assert list(table[0]) == METRIC_FIELDS
    assert table[0]["steps_to_success"] == "12.0"
    assert table[1]["steps_to_success"] == ""
    assert table[1]["errors"] == "3"


def test_reward_breakdown_totals():
    breakdown = RewardBreakdown.build(r_success=1.0, r_target=-2.0, dist_term=0.5, r_dist=-0.5)
    assert breakdown.total == pytest.approx(-1.5)
    assert breakdown.dist_term == 0.5


PLANNING_TASKS = [
    SuiteTask("gripper-drawer-open", "gripper", category="drawer", target_delta=0.1),
    SuiteTask("gripper-drawer-close", "gripper", category="drawer", initial_value=0.2, target_delta=-0.1),
    SuiteTask("gripper-laptop-open", "gripper", category="laptop", initial_value=0.8, target_delta=0.5),
    SuiteTask("gripper-laptop-close", "gripper", category="laptop", initial_value=1.5, target_delta=-0.5),
    SuiteTask("gripper-cabinet-open", "gripper", category="cabinet", initial_value=0.2, target_delta=0.5),
    SuiteTask("gripper-cabinet-close", "gripper", category="cabinet", initial_value=0.9, target_delta=-0.5),
    SuiteTask("suction-drawer", "suction", category="drawer", target_delta=0.1),
    SuiteTask("suction-cabinet", "suction", category="cabinet", initial_value=0.2, target_delta=0.5),
    SuiteTask("hand-drawer", "hand", category="drawer", target_delta=0.1, eigengrasp_dim=2),
    SuiteTask("hand-cabinet", "hand", category="cabinet", initial_value=0.2, target_delta=0.5, eigengrasp_dim=2),
]


@pytest.mark.slow
@pytest.mark.parametrize("task", PLANNING_TASKS, ids=[task.name for task in PLANNING_TASKS])
def test_default_planners_succeed_on_nine_of_ten_seeds(task):
    summary = evaluate_suite([task], seeds=range(10)).metric(task.name)
    assert summary.errors == 0
    assert summary.success_rate >= 0.9


@pytest.mark.slow
def test_two_eigengrasps_plan_as_well_as_sixteen_and_faster():
    hand = SuiteTask("hand", "hand", category="drawer", target_delta=0.1)
    report = evaluate_suite(eigengrasp_sweep(hand, dims=(2, 16)), seeds=range(10))
    small, full = report.metric("hand-m2"), report.metric("hand-m16")
    assert small.errors == full.errors == 0
    assert abs(small.success_rate - full.success_rate) <= 0.1
    assert small.time_per_step < full.time_per_step


@pytest.mark.slow
def test_reward_ablation_on_the_drawer():
    drawer = SuiteTask("drawer", "gripper", category="drawer", target_delta=0.1)
    report = evaluate_suite(ablation_tasks(drawer, ["r_dist", "r_reg"]), seeds=range(10))
    full, no_dist, no_reg = report.metric("drawer"), report.metric("drawer-no-r_dist"), report.metric("drawer-no-r_reg")
    assert no_dist.runs == 10
    assert no_dist.success_rate == 0.0
    assert no_reg.success_rate >= 0.9
    assert no_reg.mean_abs_action >= 1.2 * full.mean_abs_action
