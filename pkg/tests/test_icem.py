from __future__ import annotations

import functools
import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from twinforge.abc.configs import ICEMConfig, PlanSpace, RewardConfig, SimConfig
from twinforge.abc.generic import ConvexPiece
from twinforge.abc.modals import ArticulatedModel, EigengraspBasis, Joint, Part
from twinforge.core.errors import ConfigError
from twinforge.planner.cache import CacheType
from twinforge.planner.events import PlanFinished, PlanStarted, StepPlanned
from twinforge.planner.icem import ActionExpander, ICEMPlanner, RolloutPool, optimize_sequence, plan, rollout
from twinforge.planner.rewards import reward_suction
from twinforge.sim.presets import READY_ARM, four_finger_hand, robot_preset
from twinforge.sim.world import SimWorld, snapshot

POINTING_X = [0.0, math.pi / 2, 0.0]
AT_THE_FACE = [-0.1, 0.0, 0.05] + POINTING_X
SMALL = dict(population=30, elites=5, horizon=3, cem_iterations=2)


def _slider(static=False) -> ArticulatedModel:
    joint = Joint("prismatic", [1.0, 0.0, 0.0], [0.0, 0.0, 0.0], 0.0, 0.3)
    root = [ConvexPiece.box([0.0, -0.1, 0.0], [0.2, 0.1, 0.1])] if static else []
    box = ConvexPiece.box([0.0, 0.5, 0.0], [0.2, 0.7, 0.1]) if static else ConvexPiece.box(
        [0.0, -0.1, 0.0], [0.2, 0.1, 0.1]
    )
    return ArticulatedModel([Part(0, -1, root), Part(1, 0, [box], joint)])


def _levels(samples: np.ndarray) -> np.ndarray:
    return np.digitize(samples[..., 0], [-1.0 / 3.0, 1.0 / 3.0]) - 1


def _toy_score(levels: np.ndarray, goal: float) -> np.ndarray:
    first = 0.1 * levels[..., 0]
    second = first + 0.1 * levels[..., 1]
    return -((first - goal) ** 2) - (second - goal) ** 2


def test_first_action_matches_exhaustive_search():
    agree = 0
    for trial in range(100):
        goal = np.random.default_rng(trial).uniform(-0.25, 0.25)
        sequences = np.array(list(itertools.product([-1, 0, 1], repeat=2)))
        exhaustive = sequences[np.argmax(_toy_score(sequences, goal)), 0]

        cfg = ICEMConfig(horizon=2, population=120, elites=10, cem_iterations=3, action_bound=1.0, seed=trial)
        result = optimize_sequence(
            lambda samples: _toy_score(_levels(samples), goal),
            np.zeros((2, 1)),
            cfg.sigma(1),
            *cfg.bounds(1),
            cfg,
        )
        agree += int(_levels(result.best[None])[0, 0] == exhaustive)
    assert agree >= 95


def test_search_improves_and_is_deterministic():
    target = np.array([[0.3, -0.2], [0.1, 0.4], [0.0, 0.0]])

    def evaluate(samples):
        return -np.sum((samples - target) ** 2, axis=(1, 2))

    cfg = ICEMConfig(horizon=3, population=60, elites=6, cem_iterations=4, action_bound=0.5, seed=5)
    first = optimize_sequence(evaluate, np.zeros((3, 2)), cfg.sigma(2), *cfg.bounds(2), cfg)
    second = optimize_sequence(evaluate, np.zeros((3, 2)), cfg.sigma(2), *cfg.bounds(2), cfg)
    assert np.array_equal(first.best, second.best)
    assert np.all(np.diff(first.iteration_best) >= 0)
    assert first.best_score == pytest.approx(float(evaluate(first.best[None])[0]))
    assert first.best_score > float(evaluate(np.zeros((1, 3, 2)))[0])
    assert first.elites.shape == (6, 3, 2)
    assert np.all(np.abs(first.best) <= 0.5)


def test_kept_elites_are_evaluated():
    seen = []

    def evaluate(samples):
        seen.append(samples.copy())
        return -np.abs(samples).sum(axis=(1, 2))

    cfg = ICEMConfig(horizon=2, population=10, elites=4, cem_iterations=1, seed=0)
    kept = np.full((4, 2, 1), 0.01)
    optimize_sequence(evaluate, np.zeros((2, 1)), cfg.sigma(1), *cfg.bounds(1), cfg, kept=kept)
    # ceil(0.3 * 4) elites carried over; the mean is scored last
    assert np.array_equal(seen[0][:2], kept[:2])
    assert not np.array_equal(seen[0][2], kept[2])
    assert np.array_equal(seen[0][-1], np.zeros((2, 1)))


def test_empty_rollout_scores_zero():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    token = snapshot(world.initial_state(AT_THE_FACE))
    reward = functools.partial(reward_suction, cfg=RewardConfig.for_effector("suction", 0.0, 0.1))
    assert rollout(world, token, np.zeros((0, 6)), reward) == (0.0, [])


def test_rollout_leaves_the_start_state_alone():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    state = world.initial_state(AT_THE_FACE)
    token = snapshot(state)
    reward = functools.partial(reward_suction, cfg=RewardConfig.for_effector("suction", 0.0, 0.1))
    total, breakdowns = rollout(world, token, np.tile([0.05, 0.0, 0.0, 0.0, 0.0, 0.0], (2, 1)), reward)
    assert len(breakdowns) == 2
    assert total == pytest.approx(sum(b.total for b in breakdowns))
    assert breakdowns[1].r_target > breakdowns[0].r_target
    assert state.object_s[0] == 0.0
    assert state.step_index == 0


def test_collision_ends_the_rollout():
    world = SimWorld(_slider(static=True), robot_preset("free_suction"))
    token = snapshot(world.initial_state([-0.086, 0.0, 0.05] + POINTING_X))
    reward = functools.partial(reward_suction, cfg=RewardConfig.for_effector("suction", 0.0, 0.1))
    total, breakdowns = rollout(world, token, np.zeros((3, 6)), reward, collision_penalty=100.0)
    assert len(breakdowns) == 1
    assert total == pytest.approx(breakdowns[0].total - 100.0)


def test_expander_moves_along_eigengrasps():
    robot = robot_preset("hand")
    lower, upper = four_finger_hand().hand_limits()
    direction = np.zeros((16, 1))
    direction[1, 0] = 1.0
    mean = 0.5 * (lower + upper)
    basis = EigengraspBasis(mean, direction, np.ones(16), np.linspace(1 / 16, 1.0, 16), lower, upper)
    expand = ActionExpander(robot, basis)

    state = SimWorld(_slider(), robot).initial_state(np.r_[READY_ARM, mean])
    increment = expand(state, np.r_[np.full(7, 0.01), 0.1])
    assert increment.shape == (23,)
    assert_allclose(increment[:7], 0.01)
    assert_allclose(increment[7:], 0.1 * direction[:, 0], atol=1e-12)

    with pytest.raises(ConfigError, match="hand joints"):
        ActionExpander(robot_preset("five_finger_hand"), basis)


def test_icem_config_defaults():
    assert ICEMConfig.for_effector("gripper").population == 400
    assert ICEMConfig.for_effector("gripper").elites == 300
    assert ICEMConfig.for_effector("suction").population == 120
    with pytest.raises(ConfigError):
        ICEMConfig(population=10, elites=20)
    with pytest.raises(ConfigError):
        ICEMConfig(seed=-1)
    with pytest.raises(ConfigError):
        ICEMConfig(action_bounds=[(0.1, -0.1)])
    assert_allclose(ICEMConfig(action_bound=0.2).sigma(3), [0.2, 0.2, 0.2])


def test_planner_rejects_mismatched_setups():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    icem = ICEMConfig(**SMALL)
    with pytest.raises(ConfigError, match="reward for a suction robot"):
        ICEMPlanner(world, RewardConfig.for_effector("gripper", 0.0, 0.1), icem)
    with pytest.raises(ConfigError, match="targets joint 1"):
        ICEMPlanner(world, RewardConfig.for_effector("suction", 0.0, 0.1, target_joint=1), icem)
    with pytest.raises(ConfigError, match="need a basis"):
        ICEMPlanner(world, RewardConfig.for_effector("suction", 0.0, 0.1), icem, PlanSpace("eigengrasp", 2))


def test_already_at_the_target():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    planner = ICEMPlanner(world, RewardConfig.for_effector("suction", 0.0, 0.0), ICEMConfig(**SMALL))
    seen = []

    @planner.subscribe(PlanStarted)
    def started(event: PlanStarted) -> None:
        seen.append(event.event)

    @planner.on_finish
    def finished(event: PlanFinished) -> None:
        seen.append(event.event)

    trajectory = planner.plan(world.initial_state(AT_THE_FACE))
    assert trajectory.success
    assert trajectory.length == 0
    assert trajectory.delta == 0.0
    assert trajectory.delta_relative == 0.0
    assert trajectory.robot_q == [list(AT_THE_FACE)]
    assert seen == ["PlanStarted", "PlanFinished"]


def test_planner_pulls_the_slider():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    reward_cfg = RewardConfig.for_effector("suction", 0.0, 0.1)
    planner = ICEMPlanner(world, reward_cfg, ICEMConfig(horizon_steps=8, seed=3, **SMALL))
    records = []

    @planner.on_step
    def progress(event: StepPlanned) -> None:
        records.append(event.record)
        assert event.planner is planner
        assert event.elapsed >= 0

    initial = world.initial_state(AT_THE_FACE)
    assert initial.attached
    trajectory = planner.plan(initial)

    assert trajectory.s_final > 0.02
    assert trajectory.length == len(records) == len(trajectory.steps)
    assert [record.step for record in records] == list(range(trajectory.length))
    assert len(trajectory.robot_q) == trajectory.length + 1
    assert trajectory.delta == pytest.approx(trajectory.s_final - 0.1)
    assert planner.cache.get_actions() == trajectory.actions
    assert [b.total for b in planner.cache.get_breakdowns()] == [step.breakdown.total for step in trajectory.steps]
    assert len(planner.cache.get_best_scores()) == 2 * trajectory.length
    assert len(planner.cache.internal_memory_map[CacheType.STEP_TIMES]) == trajectory.length
    if trajectory.success:
        assert abs(trajectory.s_final - 0.1) < reward_cfg.epsilon


def test_plans_are_reproducible():
    model = _slider()
    robot = robot_preset("free_suction")
    reward_cfg = RewardConfig.for_effector("suction", 0.0, 0.1)
    icem = ICEMConfig(horizon_steps=2, seed=11, **SMALL)
    start = SimWorld(model, robot).initial_state(AT_THE_FACE)
    first = plan(start, model, robot, reward_cfg, icem)
    second = plan(start, model, robot, reward_cfg, icem, sim_config=SimConfig(target_part=1))
    assert first.actions == second.actions
    assert first.s_final == second.s_final


@pytest.mark.slow
def test_worker_pool_matches_in_process_scores():
    world = SimWorld(_slider(), robot_preset("free_suction"))
    reward_cfg = RewardConfig.for_effector("suction", 0.0, 0.1)
    token = snapshot(world.initial_state(AT_THE_FACE))
    samples = np.random.default_rng(0).uniform(-0.05, 0.05, size=(8, 3, 6))
    with RolloutPool(world, reward_cfg) as local, RolloutPool(world, reward_cfg, workers=2) as pooled:
        assert_allclose(pooled.scores(token, samples), local.scores(token, samples))
