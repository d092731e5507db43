"""Two-dimensional T-maze with a differential-drive robot.

The arena is a T-shaped corridor inside ``[-1, 1]^2``.  The robot starts at
the bottom of the stem facing north, first seeks reward zone R1 at the end
of the left arm and, once there, is put back at the start to seek R2 at the
end of the right arm.  The controlling network is not reset between phases.

Fitness is timesteps plus bump penalties, lower is better:

* R1 missed within its budget: ``2 * budget``;
* R1 reached after ``c1`` but R2 missed: ``c1 + budget``;
* both reached: ``c1 + c2``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import Optional

import numpy as np

from . import kernels as K
from .config import DEFAULT_CONFIG, Config
from .genome import Genome
from .network import Action, Network

TRAJECTORY_COLUMNS = ("timestep", "x", "y", "heading", "action", "phase", "bump")
NOISE_PER_STEP = 8


class Phase(IntEnum):
    SEEK_R1 = 0
    SEEK_R2 = 1


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    heading: float
    radius: float = 0.055


@dataclass(frozen=True)
class TrialState:
    phase: Phase = Phase.SEEK_R1
    timestep: int = 0
    penalty: int = 0
    bumps: int = 0
    solved_r1: bool = False
    solved_r2: bool = False


class Arena:
    """Wall segments, zones and light position derived from ``config.arena``."""

    START, R1, R2 = 0, 1, 2

    def __init__(self, config: Config = DEFAULT_CONFIG):
        a = config.arena
        self.config = config
        hw, s, z = a.corridor_width / 2, a.arm_half_span, a.zone_size
        self.vertices = np.array([
            (-hw, a.stem_bottom), (hw, a.stem_bottom), (hw, a.arm_bottom), (s, a.arm_bottom),
            (s, a.arm_top), (-s, a.arm_top), (-s, a.arm_bottom), (-hw, a.arm_bottom),
        ])
        v = self.vertices
        self.walls = np.hstack([v, np.roll(v, -1, axis=0)])
        mid = 0.5 * (a.arm_bottom + a.arm_top)
        self.zones = np.array([
            (-z / 2, a.stem_bottom, z / 2, a.stem_bottom + z),
            (-s, mid - z / 2, -s + z, mid + z / 2),
            (s - z, mid - z / 2, s, mid + z / 2),
        ])
        self.light = (a.light_x, a.light_y)
        self.start = (0.0, a.stem_bottom + z / 2, math.pi / 2)

    def contains(self, x, y) -> bool:
        """Point-in-polygon (boundary counts as inside)."""
        if K.clearance(x, y, self.walls) < 1e-12:
            return True
        inside = False
        v = self.vertices
        n = len(v)
        for i in range(n):
            (x1, y1), (x2, y2) = v[i], v[(i + 1) % n]
            if (y1 > y) != (y2 > y) and x < x1 + (y - y1) * (x2 - x1) / (y2 - y1):
                inside = not inside
        return inside

    def in_zone(self, x, y, zone) -> bool:
        return bool(K.in_rect(x, y, self.zones, zone))

    def start_robot(self) -> RobotState:
        x, y, h = self.start
        return RobotState(x, y, h, self.config.robot.radius)


def world_params(config: Config, arena: Optional[Arena] = None) -> np.ndarray:
    arena = arena or Arena(config)
    r = config.robot
    wp = np.zeros(K.NW)
    wp[K.W_RADIUS] = r.radius
    wp[K.W_WHEELBASE] = r.wheel_base
    wp[K.W_STEP] = r.step_distance
    wp[K.W_IR_RANGE] = r.ir_range
    wp[K.W_LIGHT_SAT] = r.light_saturation_distance
    wp[K.W_LIGHT_NOISE] = r.light_noise
    wp[K.W_IR_NOISE] = r.ir_noise
    wp[K.W_SLIP] = r.slip_probability
    wp[K.W_REVERSE] = r.bump_reverse
    wp[K.W_PENALTY] = r.bump_penalty
    wp[K.W_CONE] = math.radians(r.bump_cone_deg)
    wp[K.W_LX], wp[K.W_LY] = arena.light
    wp[K.W_LRAW_MIN] = r.light_raw_min
    wp[K.W_LRAW_MAX] = r.light_raw_max
    wp[K.W_IRRAW_MAX] = r.ir_raw_max
    for i, b in enumerate(r.sensor_bearings_deg):
        wp[K.W_B0 + i] = math.radians(b)
    wp[K.W_START_X], wp[K.W_START_Y], wp[K.W_START_H] = arena.start
    wp[K.W_BUDGET] = config.trial.phase_budget
    return wp


# ---------------------------------------------------------------------------
# single-step operations (the trial loop itself runs compiled)


def sense(arena: Arena, robot: RobotState, rng=None, noise=None):
    """Six scaled sensor readings and the (left, right) bump flags.

    ``noise`` overrides the six uniforms normally drawn from ``rng``; pass
    ``np.full(6, 0.5)`` for noiseless readings.
    """
    if noise is None:
        noise = (rng or np.random.default_rng()).random(6)
    out = np.zeros(6)
    wp = world_params(arena.config, arena)
    left, right = K.sense(robot.x, robot.y, robot.heading, arena.walls, wp, np.asarray(noise, float), out)
    return out, (bool(left), bool(right))


def act(arena: Arena, robot: RobotState, action, rng=None, u_slip=None, u_wheel=None) -> RobotState:
    if u_slip is None or u_wheel is None:
        u = (rng or np.random.default_rng()).random(2)
        u_slip = u[0] if u_slip is None else u_slip
        u_wheel = u[1] if u_wheel is None else u_wheel
    wp = world_params(arena.config, arena)
    x, y, h = K.act(robot.x, robot.y, robot.heading, int(action), u_slip, u_wheel, arena.walls, wp)
    return replace(robot, x=x, y=y, heading=h)


def handle_bump(trial: TrialState, robot: RobotState, arena: Arena):
    wp = world_params(arena.config, arena)
    x, y = K.reverse(robot.x, robot.y, robot.heading, arena.walls, wp)
    pen = arena.config.robot.bump_penalty
    return replace(trial, penalty=trial.penalty + pen, bumps=trial.bumps + 1), replace(robot, x=x, y=y)


# ---------------------------------------------------------------------------
# trials


@dataclass
class TrialResult:
    fitness: int
    c1: int
    c2: int
    reached_r1: bool
    solved: bool
    timesteps: int
    bumps: int
    penalty: int
    trajectory: Optional[np.ndarray] = None
    weights_r1: Optional[np.ndarray] = None
    weights_phase2: Optional[np.ndarray] = None
    trace: Optional["TrialTrace"] = None

    def stats(self) -> dict:
        return {"c1": self.c1, "c2": self.c2, "timesteps": self.timesteps, "bumps": self.bumps,
                "penalty": self.penalty, "reached_r1": int(self.reached_r1)}


@dataclass
class TrialTrace:
    """Per-connection plasticity tallies of one trial."""

    genes: list
    positive: np.ndarray
    negative: np.ndarray
    switches: np.ndarray
    layer_of: dict


def trial_rng(seed) -> np.random.Generator:
    if isinstance(seed, (tuple, list)):
        return np.random.default_rng(np.random.SeedSequence([int(s) for s in seed]))
    return np.random.default_rng(seed)


def run_trial(genome: Genome, config: Config = DEFAULT_CONFIG, seed=0, *, record=False, trace=False,
              network: Optional[Network] = None, arena: Optional[Arena] = None) -> TrialResult:
    """Run one two-phase trial.  ``seed`` is an int or an entropy tuple."""
    net = network or Network(genome, config)
    net.reset()
    arena = arena or Arena(config)
    wp = world_params(config, arena)
    budget = config.trial.phase_budget
    noise = trial_rng(seed).random((2 * budget, NOISE_PER_STEP))
    traj = np.zeros((2 * budget if record else 1, K.NT))
    result = np.zeros(K.NR, dtype=np.int64)
    m = net.syn_f.shape[0]
    w_r1 = np.full(m, np.nan)
    w_p2 = np.full(m, np.nan)
    K.trial_kernel(net.layer, net.sign, net.y, net.ls, net.buf, net.clock, net.out_start, net.syn_f, net.syn_i,
                   net.nparams, net.dev, arena.walls, arena.zones, wp, noise, record, traj, result, w_r1, w_p2)
    steps = int(result[K.R_TIMESTEPS])
    reached1 = bool(result[K.R_REACHED1])
    out = TrialResult(
        fitness=int(result[K.R_FITNESS]),
        c1=int(result[K.R_C1]),
        c2=int(result[K.R_C2]),
        reached_r1=reached1,
        solved=bool(result[K.R_REACHED2]),
        timesteps=steps,
        bumps=int(result[K.R_BUMPS]),
        penalty=int(result[K.R_PENALTY]),
        trajectory=traj[:steps].copy() if record else None,
        weights_r1=w_r1 if reached1 else None,
        weights_phase2=w_p2 if reached1 else None,
    )
    if trace:
        ev = net.event_counts()
        out.trace = TrialTrace(list(net.genes), ev["positive"], ev["negative"], ev["switches"], genome.layer_of())
    return out


def write_trajectory(path, trajectory: np.ndarray):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for row in trajectory:
            w.writerow([int(row[K.T_STEP]), repr(float(row[K.T_X])), repr(float(row[K.T_Y])),
                        repr(float(row[K.T_H])), Action(int(row[K.T_ACTION])).name, Phase(int(row[K.T_PHASE])).name,
                        int(row[K.T_BUMP])])
