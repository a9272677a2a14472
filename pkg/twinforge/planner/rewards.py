"""
Per-effector reward families.

Every function is pure in `(state, cfg)` and returns a `RewardBreakdown`
whose `total` is the sum of its signed terms. The distance term enters the
total negatively; the breakdown keeps the unsigned value in `dist_term`.
"""

from __future__ import annotations

__all__ = [
    "RewardFn",
    "reward_suction",
    "reward_gripper",
    "reward_hand",
    "reward_for",
]

import math
import typing as t

import numpy as np

from ..abc.configs import RewardConfig
from ..abc.modals import RewardBreakdown, SimState
from ..core.errors import ConfigError

RewardFn = t.Callable[[SimState, RewardConfig], RewardBreakdown]


def _require(cfg: RewardConfig, kind: str) -> None:
    if cfg.effector != kind:
        raise ConfigError(f"{kind} reward called with a {cfg.effector} configuration")


def _joint_value(state: SimState, cfg: RewardConfig) -> float:
    if cfg.target_joint >= len(state.object_s):
        raise ConfigError(f"target joint {cfg.target_joint} outside a {len(state.object_s)}-joint state")
    return state.object_s[cfg.target_joint]


def _span(cfg: RewardConfig) -> float:
    span = cfg.s_target - cfg.s_initial
    if span == 0.0:
        raise ConfigError("s_target equals s_initial; the progress terms are undefined")
    return span


def _shared(state: SimState, cfg: RewardConfig, point: np.ndarray) -> t.Dict[str, float]:
    s_t = _joint_value(state, cfg)
    span = _span(cfg)
    ratio = abs(s_t - cfg.s_target) / abs(span)
    if state.contact.unexpected_collision:
        contact = -cfg.w_collision
    elif state.contact.target_contact and ratio < 1.0:
        contact = cfg.w_contact
    else:
        contact = 0.0
    gap = point - state.observation.target_point
    dist = cfg.w_dist * float(gap @ gap)
    return {
        "r_success": cfg.w_success if abs(cfg.s_target - s_t) < cfg.epsilon else 0.0,
        "r_target": -cfg.w_target * (cfg.s_target - s_t) / span,
        "r_contact": contact,
        "dist_term": dist,
        "r_dist": -dist,
    }


def _finish(terms: t.Dict[str, float], cfg: RewardConfig) -> RewardBreakdown:
    for name in cfg.disabled_terms:
        terms[name] = 0.0
        if name == "r_dist":
            terms["dist_term"] = 0.0
    return RewardBreakdown.build(**terms)


def _motion_penalty(state: SimState, cfg: RewardConfig) -> float:
    acceleration = np.abs(state.last_q_acceleration)
    velocity = np.abs(state.last_q_velocity)
    return -float(np.sum(cfg.w_acc * acceleration + cfg.w_vel * velocity))


def reward_suction(state: SimState, cfg: RewardConfig) -> RewardBreakdown:
    """
    Suction reward: the shared terms measured at the virtual tip, plus a bonus
    while the suction axis lies inside the cone of half-angle ψ around the
    inward target normal.

    Raises
    ------
    ConfigError
        `cfg` is not a suction configuration, or `s_target == s_initial`.

    Example
    -------
    ```python
    cfg = RewardConfig.for_effector("suction", s_initial=0.0, s_target=0.1)
    reward_suction(state, cfg).total
    ```
    """
    _require(cfg, "suction")
    observation = state.observation
    if observation.virtual_tip is None or observation.suction_axis is None:
        raise ConfigError("suction reward needs a state with a virtual tip")
    terms = _shared(state, cfg, observation.virtual_tip)
    inward = -observation.target_normal
    cosine = float(observation.suction_axis @ inward) / (
        float(np.linalg.norm(observation.suction_axis) * np.linalg.norm(inward)) or 1.0
    )
    terms["r_dir"] = cfg.w_dir if cosine >= math.cos(cfg.psi) else 0.0
    terms["r_reg"] = _motion_penalty(state, cfg)
    return _finish(terms, cfg)


def reward_gripper(state: SimState, cfg: RewardConfig) -> RewardBreakdown:
    """
    Two-finger gripper reward: the shared terms measured at the grasp center
    and a velocity plus acceleration penalty over every robot joint.
    """
    _require(cfg, "gripper")
    terms = _shared(state, cfg, state.observation.grasp_center)
    terms["r_reg"] = _motion_penalty(state, cfg)
    return _finish(terms, cfg)


def reward_hand(state: SimState, cfg: RewardConfig) -> RewardBreakdown:
    """
    Dexterous hand reward.

    The contact term pays only while the palm and at least two fingers touch
    the target part; collisions are not penalized here. The regularizer
    penalizes joint speed and the Cartesian tracking error of the end link.
    """
    _require(cfg, "hand")
    terms = _shared(state, cfg, state.observation.grasp_center)
    contact = state.contact
    terms["r_contact"] = cfg.w_contact if contact.palm_contact and contact.finger_contact_count >= 2 else 0.0
    velocity = float(np.sum(cfg.w_vel * np.abs(state.last_q_velocity)))
    terms["r_reg"] = -cfg.w_pos * state.observation.cartesian_error - velocity
    return _finish(terms, cfg)


_FAMILIES: t.Dict[str, RewardFn] = {
    "suction": reward_suction,
    "gripper": reward_gripper,
    "hand": reward_hand,
}


def reward_for(cfg: RewardConfig) -> RewardFn:
    """
    The reward family matching `cfg.effector`.
    """
    try:
        return _FAMILIES[cfg.effector]
    except KeyError:
        raise ConfigError(f"unknown effector kind {cfg.effector!r}") from None
