"""
The `twinforge` command line.

Every subcommand reads its inputs from files, writes only the paths it is
given, and takes the shared `--seed`, `--workers`, `-v` and `-q` flags.
Domain errors exit with 1 and print `<ErrorName>: <message>` to standard
error; usage errors exit with 2.
"""

from __future__ import annotations

__all__ = ["build_parser", "run", "main", "version"]

import argparse
import datetime
import pathlib
import sys
import typing as t

import msgspec
import numpy as np
from colorama import Fore

from . import __version__
from .abc.configs import GlobalConfig, ICEMConfig, RewardConfig, SceneRecipe, SimConfig, SuiteSpec, SuiteTask
from .abc.generic import PointCloud
from .abc.modals import JointEstimate
from .core.codec import read_json, write_json
from .core.console import Console
from .core.defaults import PerceptionDefaults
from .core.errors import ConfigError, TwinforgeError
from .geometry import fileio
from .model.urdf import export_urdf, load_urdf
from .perception.affordance import affordance_to_3d
from .perception.alignment import align_scale
from .perception.kinematics import build_model, extract_part_frames, fit_joint
from .perception.segmentation import segment_movable_parts
from .planner.eigengrasp import fit_pca, read_basis, read_dataset, reconstruct, synth_grasp_dataset, write_basis
from .planner.icem import ICEMPlanner
from .planner.suite import evaluate_spec, prepare_task, write_metrics_csv
from .sim.presets import load_robot
from .sim.world import SimWorld, TraceWriter
from .synthgen.generator import generate, write_scene

text = r"""
{logo} _            _      __                      {reset}
{logo}| |___      _(_)_ __/ _| ___  _ __ __ _  ___ {reset}   {info}Articulated twins, iCEM planning{reset}
{logo}| __\ \ /\ / / | '_ \ |_ / _ \| '__/ _` |/ _ \{reset}
{logo}| |_ \ V  V /| | | | |  _| (_) | | | (_| |  __/{reset}   {version}Version: {number}{reset}
{logo} \__| \_/\_/ |_|_| |_|_|  \___/|_|  \__, |\___|{reset}
{logo}                                    |___/      {reset}   {dateandtime}Time: {time}    Date: {date}{reset}
"""

FORMATS = """\
file formats:
  clouds    .apc  ASCII, header "# apc v1 n=<N> labeled=<0|1>", one "x y z [label]" per line
  depth     .pgm  binary P5, 16-bit big-endian millimeters, 0 = invalid
  mask      .pbm  binary P4, 1 = inside
  meshes    .off  ASCII OFF, triangle faces
  camera    .json {fx, fy, cx, cy, width, height, H: 16 row-major values, base to camera}
  everything else is JSON; see the documentation of each subcommand
"""


def version() -> None:
    """
    Version information and general banner for twinforge.
    """
    details = text.format(
        time=datetime.datetime.now().time().strftime("%H:%M:%S"),
        date=f"{datetime.date.today()}",
        number=__version__,
        logo=Fore.CYAN,
        reset=Fore.RESET,
        version=Fore.LIGHTBLUE_EX,
        info=Fore.LIGHTMAGENTA_EX,
        dateandtime=Fore.GREEN,
    )
    print(details)


class _Affordance3DFile(msgspec.Struct):
    contact: t.List[float]
    direction: t.List[float]


class _PostureFile(msgspec.Struct):
    posture: t.List[float]


def _frames(paths: t.Sequence[str]) -> t.List[PointCloud]:
    return [fileio.read_cloud(path) for path in paths]


def _console(cfg: GlobalConfig) -> Console:
    return Console(enabled=cfg.verbosity > 0, verbosity=cfg.verbosity)


def _segment(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    frames = _frames(args.frames)
    contacts = fileio.read_contacts(args.contacts)
    subparts: t.Optional[t.List] = None
    if args.subparts:
        given = [fileio.read_subparts(path) for path in args.subparts]
        if len(given) == len(frames) - 1:
            given = [None, *given]  # type: ignore[list-item]
        if len(given) != len(frames):
            raise ConfigError(f"{len(args.subparts)} sub-part files for {len(frames)} frames")
        subparts = given
    segmentation = segment_movable_parts(frames, contacts, subparts, console=console)
    fileio.write_labels(args.out, segmentation)


def _fit_joints(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    frames = _frames(args.frames)
    segmentation = fileio.read_labels(args.labels)
    joints: t.Dict[int, JointEstimate] = {}
    for label in range(1, segmentation.part_count + 1):
        part_frames = extract_part_frames(frames, segmentation, label, args.corresponded)
        joints[label] = fit_joint(part_frames, args.corresponded, console=console)
        console.log(f"part {label}: {joints[label].kind}, residual {joints[label].residual:.3g} m")
    fileio.write_joints(args.out, joints)


def _build_model(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    frames = _frames(args.frames)
    segmentation = fileio.read_labels(args.labels)
    joints = fileio.read_joints(args.joints)
    subparts = fileio.read_subparts(args.subparts, len(frames[-1].points)) if args.subparts else None
    model = build_model(segmentation, frames, joints, subparts)
    out = pathlib.Path(args.out)
    export_urdf(model, out.parent, out.name)
    console.log(f"wrote {model.dof}-joint model to {out}")


def _align_scale(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    pieces = [fileio.read_mesh(path) for path in args.mesh]
    intr, extr = fileio.read_camera(args.camera)
    pose = align_scale(
        pieces,
        fileio.read_depth(args.depth),
        fileio.read_mask(args.mask),
        intr,
        extr,
        yaw_samples=args.yaw_samples,
        refine_steps=args.refine_steps,
        console=console,
    )
    fileio.write_pose(args.out, pose)


def _project_affordance(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    intr, extr_real = fileio.read_camera(args.camera_real)
    _, extr_virtual = fileio.read_camera(args.camera_virtual)
    _, aff_real = fileio.read_affordance(args.aff_real)
    _, aff_virtual = fileio.read_affordance(args.aff_virtual)
    result = affordance_to_3d(
        fileio.read_depth(args.depth),
        fileio.read_mask(args.mask),
        intr,
        extr_real,
        extr_virtual,
        aff_real,
        aff_virtual,
        window=args.window,
        console=console,
    )
    write_json(args.out, _Affordance3DFile(result.contact.tolist(), result.direction.tolist()))


def _eigengrasp_fit(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    if args.dataset is not None:
        data = read_dataset(args.dataset)
    else:
        hand = load_robot(args.hand).effector
        data = synth_grasp_dataset(hand, args.count, seed=cfg.seed)
    write_basis(args.out, fit_pca(data, args.m, console=console))


def _eigengrasp_reconstruct(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    basis = read_basis(args.basis)
    posture = reconstruct(basis, args.coeffs, include_mean=not args.strict)
    write_json(args.out, _PostureFile(posture.tolist()))


def _task_from_args(args: argparse.Namespace) -> SuiteTask:
    return SuiteTask(
        name="plan",
        effector=args.effector,
        category=args.category,
        model=args.model,
        robot=args.robot,
        target_joint=args.target_joint,
        initial_value=args.initial_value,
        target_value=args.target_value,
        target_delta=args.target_delta,
        eigengrasp_dim=args.eigengrasp_dim,
        basis=args.basis,
    )


def _plan(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    if args.model is None and args.category is None:
        raise ConfigError("plan needs --model or --category")
    prepared = prepare_task(_task_from_args(args))
    reward = prepared.reward
    if args.reward is not None:
        reward = msgspec.structs.replace(
            read_json(args.reward, RewardConfig),
            s_initial=reward.s_initial,
            s_target=reward.s_target,
            target_joint=reward.target_joint,
        )
    icem = read_json(args.icem, ICEMConfig) if args.icem is not None else prepared.icem
    icem = msgspec.structs.replace(icem, seed=cfg.seed if args.seed is not None else icem.seed, workers=cfg.workers)
    sim = read_json(args.sim, SimConfig) if args.sim is not None else prepared.sim
    world = SimWorld(prepared.model, prepared.robot, sim, console)
    planner = ICEMPlanner(world, reward, icem, prepared.space, prepared.basis, console)
    trajectory = planner.plan(world.initial_state(prepared.robot_q, prepared.object_s))
    write_json(args.out, trajectory)


def _simulate(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    model = load_urdf(args.model)
    robot = load_robot(args.robot)
    sim = read_json(args.sim, SimConfig) if args.sim is not None else SimConfig(target_part=args.target_part)
    script = read_json(args.script, t.List[t.List[float]])
    world = SimWorld(model, robot, sim, console)
    state = world.initial_state(args.robot_q, args.object_s)
    with TraceWriter(args.trace) as trace:
        trace.write(state)
        for action in script:
            state = world.step(state, np.asarray(action, dtype=np.float64))
            trace.write(state)
    console.log(f"simulated {len(script)} steps, object at {np.round(state.object_s.values, 4).tolist()}")


def _eval(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    spec = read_json(args.suite, SuiteSpec)
    if args.seed is not None:
        spec = msgspec.structs.replace(spec, seeds=[cfg.seed])
    report = evaluate_spec(spec, cfg, console)
    write_metrics_csv(args.out, report.metrics)
    if args.results is not None:
        write_json(args.results, report)


def _synthgen(args: argparse.Namespace, cfg: GlobalConfig, console: Console) -> None:
    recipe = read_json(args.recipe, SceneRecipe)
    if args.seed is not None:
        recipe = msgspec.structs.replace(recipe, seed=cfg.seed)
    scene = generate(recipe, render=not args.no_render, console=console)
    written = write_scene(scene, args.out)
    console.log(f"wrote {len(written)} files to {args.out}")


Handler = t.Callable[[argparse.Namespace, GlobalConfig, Console], None]


def build_parser() -> argparse.ArgumentParser:
    """
    The argument parser of every subcommand.
    """
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed of every random choice (default: 0)")
    common.add_argument("--workers", type=int, default=None, help="rollout worker processes (env TWINFORGE_WORKERS)")
    common.add_argument("-v", "--verbose", action="count", default=1, help="more log output")
    common.add_argument("-q", "--quiet", action="store_true", help="log nothing")

    parser = argparse.ArgumentParser(
        prog="twinforge",
        description="Articulated-object twins and sampling-based manipulation planning.",
        epilog=FORMATS,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="store_true", help="show the version banner and exit")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND")

    def command(name: str, handler: Handler, help_text: str) -> argparse.ArgumentParser:
        sub = commands.add_parser(
            name,
            parents=[common],
            help=help_text,
            description=help_text,
            epilog=FORMATS,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        sub.set_defaults(handler=handler)
        return sub

    sub = command("segment", _segment, "Label the movable parts of the last frame (labels JSON).")
    sub.add_argument("--frames", nargs="+", required=True, help="K + 1 .apc clouds, in order")
    sub.add_argument("--contacts", required=True, help="JSON list of K contact points [x, y, z]")
    sub.add_argument("--subparts", nargs="*", help="sub-part JSON {subparts: [[indices]]} of frames 1..K (or 0..K)")
    sub.add_argument("--out", required=True, help="labels JSON {labels, history}")

    sub = command("fit-joints", _fit_joints, "Fit one joint per movable part (joints JSON).")
    sub.add_argument("--frames", nargs="+", required=True)
    sub.add_argument("--labels", required=True)
    sub.add_argument("--corresponded", action="store_true", help="point i is the same surface point in every frame")
    sub.add_argument("--out", required=True, help="joints JSON {joints: [{part, kind, axis, origin, ...}]}")

    sub = command("build-model", _build_model, "Assemble the articulated model and write URDF with OFF meshes.")
    sub.add_argument("--frames", nargs="+", required=True)
    sub.add_argument("--labels", required=True)
    sub.add_argument("--joints", required=True)
    sub.add_argument("--subparts", help="sub-parts of the last frame; each becomes a convex piece")
    sub.add_argument("--out", required=True, help="URDF path; meshes go to meshes/ next to it")

    sub = command("align-scale", _align_scale, "Place a mesh in a depth observation and recover its scale.")
    sub.add_argument("--mesh", nargs="+", required=True, help="OFF pieces of the mesh")
    sub.add_argument("--depth", required=True)
    sub.add_argument("--mask", required=True)
    sub.add_argument("--camera", required=True)
    sub.add_argument("--yaw-samples", type=int, default=PerceptionDefaults.YAW_SAMPLES)
    sub.add_argument("--refine-steps", type=int, default=PerceptionDefaults.REFINE_STEPS)
    sub.add_argument("--out", required=True, help="pose JSON {yaw, translation, scale, iou}")

    sub = command("project-affordance", _project_affordance, "Lift pixel affordances to a 3D contact and direction.")
    sub.add_argument("--depth", required=True)
    sub.add_argument("--mask", required=True)
    sub.add_argument("--camera-real", required=True)
    sub.add_argument("--camera-virtual", required=True, help="only its extrinsics are used")
    sub.add_argument("--aff-real", required=True, help="affordance JSON {view, contact: [u, v], trajectory: [du, dv]}")
    sub.add_argument("--aff-virtual", required=True)
    sub.add_argument("--window", type=int, default=2, help="depth lookup half window, pixels")
    sub.add_argument("--out", required=True, help="JSON {contact, direction}")

    eigengrasp = commands.add_parser("eigengrasp", help="Eigengrasp basis fitting and reconstruction.")
    actions = eigengrasp.add_subparsers(dest="action", metavar="ACTION", required=True)
    sub = actions.add_parser("fit", parents=[common], help="Fit a basis JSON from an EGDS dataset or synthetic grasps.")
    sub.set_defaults(handler=_eigengrasp_fit)
    source = sub.add_mutually_exclusive_group(required=True)
    source.add_argument("--dataset", help="EGDS dataset with its JSON sidecar")
    source.add_argument("--hand", help="robot preset or JSON whose hand is sampled")
    sub.add_argument("--count", type=int, default=2000, help="synthetic postures")
    sub.add_argument("-m", type=int, default=2, help="eigengrasps to keep")
    sub.add_argument("--out", required=True)
    sub = actions.add_parser("reconstruct", parents=[common], help="Posture JSON from eigengrasp coefficients.")
    sub.set_defaults(handler=_eigengrasp_reconstruct)
    sub.add_argument("--basis", required=True)
    sub.add_argument("--coeffs", type=float, nargs="+", required=True)
    sub.add_argument("--strict", action="store_true", help="leave out the mean posture")
    sub.add_argument("--out", required=True, help="JSON {posture}")

    sub = command("plan", _plan, "Plan a manipulation trajectory with iCEM (trajectory JSON).")
    sub.add_argument("--model", help="URDF of the object")
    sub.add_argument("--category", help="synthetic object category instead of --model")
    sub.add_argument("--robot", help="robot preset or JSON (default: the effector's preset)")
    sub.add_argument("--effector", choices=["suction", "gripper", "hand"], required=True)
    sub.add_argument("--target-joint", type=int, default=0)
    sub.add_argument("--initial-value", type=float)
    goal = sub.add_mutually_exclusive_group(required=True)
    goal.add_argument("--target-value", type=float)
    goal.add_argument("--target-delta", type=float)
    sub.add_argument("--icem", help="ICEMConfig JSON")
    sub.add_argument("--reward", help="RewardConfig JSON; task values come from the flags")
    sub.add_argument("--sim", help="SimConfig JSON")
    sub.add_argument("--eigengrasp-dim", type=int, help="plan hand actions in an m-dimensional eigengrasp space")
    sub.add_argument("--basis", help="basis JSON instead of a synthetic fit")
    sub.add_argument("--out", required=True, help="trajectory JSON")

    sub = command("simulate", _simulate, "Replay scripted robot increments and trace every state (JSONL).")
    sub.add_argument("--model", required=True)
    sub.add_argument("--robot", required=True)
    sub.add_argument("--script", required=True, help="JSON list of joint increments")
    sub.add_argument("--sim", help="SimConfig JSON")
    sub.add_argument("--target-part", type=int, default=1)
    sub.add_argument("--robot-q", type=float, nargs="+")
    sub.add_argument("--object-s", type=float, nargs="+")
    sub.add_argument("--trace", required=True)

    sub = command("eval", _eval, "Run an evaluation suite and write its metrics table (CSV).")
    sub.add_argument("--suite", required=True, help="SuiteSpec JSON {tasks, seeds}; --seed replaces the seeds")
    sub.add_argument("--out", required=True)
    sub.add_argument("--results", help="JSON with every run and the aggregates")

    sub = command("synthgen", _synthgen, "Generate a synthetic articulated scene directory.")
    sub.add_argument("--recipe", required=True, help="SceneRecipe JSON")
    sub.add_argument("--no-render", action="store_true", help="skip depth and mask renders")
    sub.add_argument("--out", required=True)
    return parser


def run(argv: t.Optional[t.Sequence[str]] = None) -> int:
    """
    Runs one command line.

    Returns
    -------
    int
        0 on success, 1 on a domain error, 2 on a usage error.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    if args.version:
        version()
        return 0
    if getattr(args, "handler", None) is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = GlobalConfig.from_environment(
            seed=args.seed or 0, workers=args.workers, verbosity=0 if args.quiet else args.verbose
        )
        args.handler(args, cfg, _console(cfg))
    except TwinforgeError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
