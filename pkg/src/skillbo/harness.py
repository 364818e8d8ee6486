"""Pipeline orchestration: scene -> plan -> behavior tree -> learning loop.

Seeds fan out from one master seed through fixed tags (suggestion rng,
world rng, held-out rng) and counters (iteration, world index), so results
are reproducible regardless of how world evaluations are scheduled.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from .behavior_tree import TickResult, assemble_bt
from .control_sim.contact import ContactParams
from .control_sim.controller import ControllerConfig
from .control_sim.motion import MotionCommand, MotionGenerator
from .control_sim.simulator import (
    Action,
    CartesianSimulator,
    PegEnvironment,
    PushEnvironment,
    RandomizationSpec,
    SimulationAbort,
)
from .optimizer.mobo import MoboConfig, MultiObjectiveBO
from .optimizer.results import ResultsFile, Trial, WorldResult
from .pddl import UNSOLVABLE, Plan, generate_domain, generate_problem, plan as run_planner
from .rewards import EpisodeTrace, Objective, ObjectiveVector, StepRecord, accumulate, parse_reward_specs
from .skills import DEFAULT_SUCCESS, SKILL_REGISTRY
from .world_model import Relation, WorldModel, collect_learnables, model_from_dict
from .optimizer.space import ParamSpace

ACTION_DT = 0.02  # s, one behavior-tree tick
SUBSTEPS = 10  # inner 2 ms steps per action

# seed-tag constants for the splittable counter scheme
_TAG_SUGGEST = 0xA5
_TAG_WORLD = 0xE1
_TAG_HELD_OUT = 0x1E1D


class ConfigError(Exception):
    pass


class UnsolvableGoalError(Exception):
    pass


@dataclass
class ScenarioConfig:
    name: str
    model: WorldModel
    goal: list[Relation]
    objectives: list[Objective]
    reward_specs: list
    iterations: int
    worlds: int
    sigma: float
    start_poses: list
    perturb: list[str]
    observable: bool
    horizon: float
    success: dict
    fidelity: str = "cartesian"
    mobo: MoboConfig = field(default_factory=MoboConfig)
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    contacts: ContactParams = field(default_factory=ContactParams)
    mu_ground: float = 0.4
    funnel_gain: float = 1.0
    document: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.worlds < 1:
            raise ConfigError("worlds-per-evaluation must be >= 1")
        if self.iterations != 0 and self.iterations < self.mobo.warmup:
            raise ConfigError("iterations must be 0 or >= the warm-up budget")
        if not self.start_poses:
            raise ConfigError("at least one start configuration is required")
        if self.fidelity != "cartesian":
            raise ConfigError("learning scenarios run in cartesian fidelity")

    def config_hash(self, master_seed: int, iterations: int | None = None) -> str:
        payload = {
            "document": self.document,
            "seed": master_seed,
            "iterations": self.iterations if iterations is None else iterations,
        }
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def load_scenario(path) -> ScenarioConfig:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: scenario file must be a mapping")
    return parse_scenario(doc, source=str(path))


def parse_scenario(doc: dict, source: str = "<scenario>") -> ScenarioConfig:
    try:
        model = model_from_dict(doc)
        goal = [
            Relation(g["subject"], g["predicate"], g["object"]) for g in doc.get("goal", [])
        ]
        objectives = [
            Objective(o["name"], o.get("sense", "max")) for o in doc.get("objectives", [])
        ]
        rewards = parse_reward_specs(doc.get("rewards", []))
        bo = doc.get("bo", {})
        rand = doc.get("randomization", {})
        episode = doc.get("episode", {})
        ctrl = doc.get("controller", {})
        contacts = doc.get("contacts", {})
        mobo = MoboConfig(
            warmup=int(bo.get("warmup", 20)),
            candidates=int(bo.get("candidates", 5000)),
            scalarization=bo.get("scalarization", "tchebyshev"),
            gp_restarts=int(bo.get("gp_restarts", 5)),
        )
        controller = ControllerConfig(
            stiffness=np.asarray(
                ctrl.get("stiffness", [700.0, 700.0, 700.0, 50.0, 50.0, 50.0]), dtype=float
            ),
            stiffness_ramp=float(ctrl.get("stiffness_ramp", 2000.0)),
            wrench_ramp=float(ctrl.get("wrench_ramp", 50.0)),
            mass=float(ctrl.get("mass", 2.0)),
            rot_inertia=float(ctrl.get("rot_inertia", 0.02)),
        )
        params = ContactParams(
            k_c=float(contacts.get("k_c", 1.0e4)),
            c_c=float(contacts.get("c_c", 100.0)),
            mu=float(contacts.get("mu", 0.4)),
        )
        success = dict(DEFAULT_SUCCESS)
        success.update(episode.get("success", {}))
        return ScenarioConfig(
            name=doc.get("name", "scenario"),
            model=model,
            goal=goal,
            objectives=objectives,
            reward_specs=rewards,
            iterations=int(bo.get("iterations", 400)),
            worlds=int(rand.get("worlds", 7)),
            sigma=float(rand.get("sigma", 0.007)),
            start_poses=[np.asarray(p, dtype=float) for p in rand.get("start_poses", [])],
            perturb=list(rand.get("perturb", [])),
            observable=bool(rand.get("observable", False)),
            horizon=float(episode.get("horizon", 30.0)),
            success=success,
            fidelity=doc.get("fidelity", "cartesian"),
            mobo=mobo,
            controller=controller,
            contacts=params,
            mu_ground=float(contacts.get("mu_ground", contacts.get("mu", 0.4))),
            funnel_gain=float(contacts.get("funnel_gain", 1.0)),
            document=doc,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from exc


# --- planning ----------------------------------------------------------------


def plan_scenario(scenario: ScenarioConfig) -> Plan:
    domain = generate_domain(scenario.model, name=scenario.name)
    problem = generate_problem(scenario.model, scenario.goal, domain_name=scenario.name)
    result = run_planner(domain, problem)
    if result is UNSOLVABLE:
        raise UnsolvableGoalError(f"goal {scenario.goal} is unsolvable in scenario {scenario.name}")
    return result


# --- one episode ----------------------------------------------------------------


@dataclass
class EpisodeResult:
    trace: EpisodeTrace
    context: dict
    start_pose: np.ndarray


def _build_environment(scenario: ScenarioConfig, realized: dict):
    """Instantiate the contact environment from the realized object poses."""
    model = scenario.model
    boxes_with_hole = model.objects_of_kind("box-with-hole")
    if boxes_with_hole:
        box = boxes_with_hole[0]
        pegs = model.objects_of_kind("peg")
        if not pegs:
            raise ConfigError("peg scenario needs a peg object")
        pose = realized.get(box.id, box.pose)
        return PegEnvironment(
            hole_xy=(pose[0], pose[1]),
            surface_z=pose[2] + box.prop("size-z"),
            hole_radius=box.prop("hole-radius"),
            peg_radius=pegs[0].prop("radius"),
            bore_depth=box.prop("size-z"),
            funnel_gain=scenario.funnel_gain,
            params=scenario.contacts,
            box_id=box.id,
            box_pose=pose,
        )
    movable = [o for o in model.objects.values() if o.kind == "box"]
    if movable:
        obj = movable[0]
        pose = realized.get(obj.id, obj.pose)
        a = obj.prop("size-x")
        b = obj.prop("size-y")
        grippers = model.objects_of_kind("gripper")
        pusher_side = grippers[0].prop("pusher-side", 0.07) if grippers else 0.07
        yaw = 2.0 * math.atan2(pose[5], pose[6])
        return PushEnvironment(
            object_id=obj.id,
            vertices=[(-a / 3, -b / 3), (2 * a / 3, -b / 3), (-a / 3, 2 * b / 3)],
            pose_xyyaw=(pose[0], pose[1], yaw),
            mass=obj.prop("mass"),
            com_offset=(obj.prop("com-offset-x", 1e-9), obj.prop("com-offset-y", 1e-9)),
            mu_ground=scenario.mu_ground,
            pusher_radius=pusher_side / 2.0,
            params=scenario.contacts,
            object_z=pose[2],
            object_height=obj.prop("size-z"),
        )
    return None


def _reward_context(scenario: ScenarioConfig, realized: dict) -> dict:
    poses = {oid: obj.pose.copy() for oid, obj in scenario.model.objects.items()}
    poses.update({k: v.copy() for k, v in realized.items()})
    half_extents = {}
    for obj in scenario.model.objects.values():
        if "size-x" in obj.properties:
            half_extents[obj.id] = (
                obj.prop("size-x") / 2.0,
                obj.prop("size-y") / 2.0,
                obj.prop("size-z") / 2.0,
            )
    return {"poses": poses, "half_extents": half_extents}


def run_episode(
    scenario: ScenarioConfig,
    the_plan: Plan,
    configuration: dict,
    world_entropy,
    record_rows: list | None = None,
) -> EpisodeResult:
    spec = RandomizationSpec(
        sigma=scenario.sigma, start_poses=scenario.start_poses, seed=world_entropy
    )
    rng = spec.rng()
    start_pose = spec.start_poses[int(rng.integers(len(spec.start_poses)))]
    realized: dict[str, np.ndarray] = {}
    for oid in scenario.perturb:
        pose = scenario.model.get(oid).pose.copy()
        pose[0] += rng.normal(0.0, spec.sigma)
        pose[1] += rng.normal(0.0, spec.sigma)
        realized[oid] = pose

    episode_model = scenario.model.copy()
    if scenario.observable:
        for oid, pose in realized.items():
            episode_model.objects[oid].pose = pose.copy()

    env = _build_environment(scenario, realized)
    sim = CartesianSimulator(
        config=scenario.controller, environment=env, start_pose=start_pose
    )
    tree = assemble_bt(
        the_plan, episode_model, SKILL_REGISTRY, values=configuration, success=scenario.success
    )
    mg = MotionGenerator(start_pose)
    blackboard = {
        "model": episode_model,
        "success": scenario.success,
        "cmd.goal": start_pose.copy(),
        "cmd.stiffness": scenario.controller.stiffness.copy(),
        "cmd.wrench": np.zeros(6),
        "cmd.overlay": None,
        "cmd.speed": None,
    }

    steps: list[StepRecord] = []
    n_ticks = int(round(scenario.horizon / ACTION_DT))
    result = TickResult.RUNNING
    aborted = False
    terminal = False
    for _ in range(n_ticks):
        blackboard["state"] = sim.snapshot()
        if not terminal:
            result = tree.tick(blackboard)
            if result is not TickResult.RUNNING:
                # task over: hold position for the rest of the fixed horizon,
                # so episode returns stay comparable across configurations
                terminal = True
                tree.halt(blackboard)
                hold = blackboard["state"].ee_pose.copy()
                blackboard["cmd.goal"] = hold
                blackboard["cmd.overlay"] = None
                blackboard["cmd.wrench"] = np.zeros(6)
        command = MotionCommand(
            goal_pose=blackboard["cmd.goal"],
            stiffness=blackboard["cmd.stiffness"],
            wrench=blackboard["cmd.wrench"],
            overlay=blackboard["cmd.overlay"],
            linear_speed=blackboard["cmd.speed"],
        )
        reference = mg.step(command, ACTION_DT)
        action = Action(reference, command.stiffness, command.wrench)
        try:
            sim.run_action(action, SUBSTEPS)
        except SimulationAbort:
            aborted = True
            break
        snap = sim.snapshot()
        steps.append(
            StepRecord(
                t=snap.t,
                ee_pos=snap.ee_pose[:3],
                ref_pos=reference[:3],
                contact_force=snap.contact_force,
                objects=snap.objects,
                insertion_depth=snap.insertion_depth,
            )
        )
        if record_rows is not None:
            record_rows.append(_record_row(snap, reference))
    if not terminal:
        tree.halt(blackboard)
    if not steps:  # zero-length horizon or instant abort: keep traces non-empty
        snap = sim.snapshot()
        steps.append(
            StepRecord(
                t=snap.t,
                ee_pos=snap.ee_pose[:3],
                ref_pos=np.asarray(start_pose[:3], dtype=float),
                contact_force=snap.contact_force,
                objects=snap.objects,
                insertion_depth=snap.insertion_depth,
            )
        )
    trace = EpisodeTrace(
        steps=steps,
        dt=ACTION_DT,
        success=result is TickResult.SUCCESS,
        bt_result=result.value,
        aborted=aborted,
    )
    return EpisodeResult(
        trace=trace, context=_reward_context(scenario, realized), start_pose=start_pose
    )


def _record_row(snap, reference) -> list:
    row = [snap.t]
    row += [float(v) for v in snap.ee_pose]
    row += [float(v) for v in reference]
    row.append(snap.contact_force)
    row.append(snap.insertion_depth)
    for oid in sorted(snap.objects):
        row += [float(v) for v in snap.objects[oid]]
    return row


# --- configuration evaluation ------------------------------------------------------


def _world_entropy(master_seed: int, iteration: int, world: int) -> tuple:
    return (master_seed, _TAG_WORLD, iteration, world)


def evaluate_world(
    scenario: ScenarioConfig, the_plan: Plan, configuration: dict, entropy
) -> tuple[ObjectiveVector, bool, bool]:
    """One domain-randomized episode; returns (objective vector, success,
    aborted)."""
    episode = run_episode(scenario, the_plan, configuration, entropy)
    vector = accumulate(
        episode.trace, scenario.reward_specs, scenario.objectives, episode.context
    )
    return vector, episode.trace.success, episode.trace.aborted


_POOL_SCENARIO = None
_POOL_PLAN = None


def _pool_init(scenario, the_plan):
    global _POOL_SCENARIO, _POOL_PLAN
    _POOL_SCENARIO = scenario
    _POOL_PLAN = the_plan


def _pool_eval(args):
    configuration, entropy = args
    vector, success, aborted = evaluate_world(_POOL_SCENARIO, _POOL_PLAN, configuration, entropy)
    return vector.values, success, aborted


def evaluate_configuration(
    scenario: ScenarioConfig,
    the_plan: Plan,
    configuration: dict,
    master_seed: int,
    iteration: int,
    pool: ProcessPoolExecutor | None = None,
) -> tuple[ObjectiveVector, list[WorldResult]]:
    """Mean objective vector over the scenario's randomized worlds; results
    are merged by world index, so scheduling cannot change them."""
    names = tuple(o.name for o in scenario.objectives)
    entropies = [
        _world_entropy(master_seed, iteration, w) for w in range(scenario.worlds)
    ]
    if pool is not None:
        outputs = list(pool.map(_pool_eval, [(configuration, e) for e in entropies]))
    else:
        outputs = []
        for e in entropies:
            vector, success, aborted = evaluate_world(scenario, the_plan, configuration, e)
            outputs.append((vector.values, success, aborted))
    worlds = []
    rows = []
    for w, (values, success, aborted) in enumerate(outputs):
        rows.append(np.asarray(values, dtype=float))
        worlds.append(
            WorldResult(
                world=w,
                seed=_seed_int(entropies[w]),
                objectives={n: float(v) for n, v in zip(names, values)},
                success=bool(success),
                aborted=bool(aborted),
            )
        )
    mean = np.mean(np.stack(rows), axis=0)
    return ObjectiveVector(names=names, values=mean), worlds


def _seed_int(entropy) -> int:
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


# --- the learning loop ---------------------------------------------------------


@dataclass
class RunResult:
    scenario: str
    trials: list[Trial]
    front_indices: list[int]
    config_hash: str
    objective_names: tuple[str, ...]
    wall_clock_s: float = 0.0

    def front(self) -> list[Trial]:
        return [self.trials[i] for i in self.front_indices]


def build_param_space(scenario: ScenarioConfig, the_plan: Plan) -> ParamSpace:
    learnables = collect_learnables(scenario.model, list(the_plan))
    if not learnables:
        raise ConfigError("plan exposes no learnable parameters")
    return ParamSpace.from_learnables(learnables)


def run_learning(
    scenario: ScenarioConfig,
    master_seed: int = 0,
    iterations: int | None = None,
    out_path=None,
    resume: bool = False,
    jobs: int = 1,
) -> RunResult:
    t0 = time.monotonic()
    iterations = scenario.iterations if iterations is None else int(iterations)
    if iterations != 0 and iterations < scenario.mobo.warmup:
        raise ConfigError("iterations must be 0 or >= the warm-up budget")
    the_plan = plan_scenario(scenario)
    config_hash = scenario.config_hash(master_seed, iterations)
    names = tuple(o.name for o in scenario.objectives)
    senses = {o.name: o.sense for o in scenario.objectives}

    results = ResultsFile(out_path) if out_path is not None else None
    start_at = 0
    trials: list[Trial] = []
    mobo = None
    if iterations > 0:
        space = build_param_space(scenario, the_plan)
        mobo = MultiObjectiveBO(space, len(names), scenario.mobo)
    if results is not None:
        if resume and results.exists():
            start_at = results.resume_point(config_hash)
            _, trials, _ = results.read()
            if mobo is not None:
                for t in trials:
                    mobo.tell(t.configuration, [t.objectives[n] for n in names])
        else:
            results.start(
                config_hash,
                meta={"scenario": scenario.name, "created": time.time()},
                extra={
                    "scenario_document": scenario.document,
                    "seed": master_seed,
                    "iterations": iterations,
                },
            )

    pool = None
    try:
        if jobs > 1 and iterations > start_at:
            pool = ProcessPoolExecutor(
                max_workers=jobs, initializer=_pool_init, initargs=(scenario, the_plan)
            )
        for it in range(start_at, iterations):
            rng = np.random.default_rng(
                np.random.SeedSequence((master_seed, _TAG_SUGGEST, it))
            )
            configuration = mobo.ask(rng)
            vector, worlds = evaluate_configuration(
                scenario, the_plan, configuration, master_seed, it, pool
            )
            mobo.tell(configuration, vector.values)
            raw = {
                n: (v if senses[n] == "max" else -v) for n, v in vector.as_dict().items()
            }
            trial = Trial(
                iteration=it,
                configuration=configuration,
                objectives=vector.as_dict(),
                raw_objectives=raw,
                worlds=worlds,
                seed=master_seed,
                all_worlds_aborted=all(w.aborted for w in worlds),
            )
            trials.append(trial)
            if results is not None:
                results.append_trial(trial)
    finally:
        if pool is not None:
            pool.shutdown()

    front = mobo.pareto_indices() if mobo is not None and len(mobo) else []
    wall = time.monotonic() - t0
    if results is not None:
        results.write_front(front, meta={"wall_clock_s": wall})
    return RunResult(
        scenario=scenario.name,
        trials=trials,
        front_indices=front,
        config_hash=config_hash,
        objective_names=names,
        wall_clock_s=wall,
    )


# --- replay and held-out evaluation ---------------------------------------------


def replay_trial(
    scenario: ScenarioConfig,
    trial: Trial,
    entropies=None,
    record_path=None,
) -> dict:
    """Re-execute a recorded configuration; on the recorded world seeds this
    reproduces the recorded outcome exactly."""
    the_plan = plan_scenario(scenario)
    if entropies is None:
        entropies = [_world_entropy(trial.seed, trial.iteration, w.world) for w in trial.worlds]
    rows_all: list = []
    successes = []
    for entropy in entropies:
        rows = [] if record_path is not None else None
        episode = run_episode(scenario, the_plan, trial.configuration, entropy, record_rows=rows)
        successes.append(episode.trace.success)
        if rows is not None:
            rows_all.extend(rows)
    if record_path is not None:
        _write_record(record_path, rows_all)
    return {
        "successes": successes,
        "success_rate": sum(successes) / len(successes) if successes else 0.0,
    }


def held_out_entropies(master_seed: int, count: int) -> list[tuple]:
    return [(master_seed, _TAG_HELD_OUT, k) for k in range(count)]


def held_out_success_rate(
    scenario: ScenarioConfig,
    the_plan: Plan,
    configuration: dict,
    master_seed: int,
    count: int,
    pool: ProcessPoolExecutor | None = None,
) -> float:
    entropies = held_out_entropies(master_seed, count)
    if pool is not None:
        outs = list(pool.map(_pool_eval, [(configuration, e) for e in entropies]))
        return sum(1 for _, success, _ in outs if success) / count
    wins = 0
    for e in entropies:
        episode = run_episode(scenario, the_plan, configuration, e)
        wins += 1 if episode.trace.success else 0
    return wins / count


def _write_record(path, rows) -> None:
    with open(path, "w") as fh:
        for row in rows:
            fh.write("\t".join(f"{v:.9g}" if isinstance(v, float) else str(v) for v in row))
            fh.write("\n")
