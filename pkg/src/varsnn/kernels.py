"""Compiled inner loops: spiking network steps, robot physics, whole trials.

Everything here works on flat numpy arrays so the same functions run under
numba or as plain Python (``VARSNN_NO_NUMBA=1``).  Random numbers are drawn
by the caller and passed in, which keeps both backends bit-compatible and
makes trials independent of any global RNG state.

Network layout: neurons are ordered inputs, hidden (in hidden-layer order),
outputs.  Synapses are rows of ``syn_f`` / ``syn_i`` sorted by presynaptic
neuron, with ``out_start`` giving each neuron's slice (CSR).
"""

import math

import numpy as np

from ._accel import jit
from .synapses import rsm_kernel, weight_kernel

# neuron layers
INPUT = 0
HIDDEN = 1
OUTPUT = 2

# actions
FORWARD = 0
TURN_LEFT = 1
TURN_RIGHT = 2

# synapse float columns
F_W = 0
F_Q = 1
F_QMAX = 2
F_DQ = 3
F_BETA = 4
F_SF1 = 5
F_SF2 = 6
F_W0 = 7
NF = 8

# synapse int columns
I_PRE = 0
I_POST = 1
I_KIND = 2
I_DTYPE = 3
I_DELAY = 4
I_SN = 5
I_SC = 6
I_NPOS = 7
I_NNEG = 8
I_NSW = 9
NI = 10

# compiled synapse kinds
K_MEM = 0
K_RSM = 1
K_CONST = 2

# neuron parameter vector
P_A = 0
P_B = 1
P_C = 2
P_THETA = 3
P_LS_ON = 4
P_THETA_LS = 5
P_STEPS = 6
P_HIGH = 7
NP = 8

# device parameter vector
D_RON = 0
D_ROFF = 1
D_QMIN = 2
D_LRS = 3
D_HRS = 4
ND = 5

# world parameter vector
W_RADIUS = 0
W_WHEELBASE = 1
W_STEP = 2
W_IR_RANGE = 3
W_LIGHT_SAT = 4
W_LIGHT_NOISE = 5
W_IR_NOISE = 6
W_SLIP = 7
W_REVERSE = 8
W_PENALTY = 9
W_CONE = 10
W_LX = 11
W_LY = 12
W_LRAW_MIN = 13
W_LRAW_MAX = 14
W_IRRAW_MAX = 15
W_B0 = 16
W_B1 = 17
W_B2 = 18
W_START_X = 19
W_START_Y = 20
W_START_H = 21
W_BUDGET = 22
NW = 23

# trial result vector
R_FITNESS = 0
R_C1 = 1
R_C2 = 2
R_REACHED1 = 3
R_REACHED2 = 4
R_TIMESTEPS = 5
R_BUMPS = 6
R_PENALTY = 7
NR = 8

# trajectory columns
T_STEP = 0
T_X = 1
T_Y = 2
T_H = 3
T_ACTION = 4
T_PHASE = 5
T_BUMP = 6
NT = 7

CONTACT_TOL = 1e-6
PENETRATION_TOL = 1e-9
REVERSE_SUBSTEP = 0.002

# ---------------------------------------------------------------------------
# spiking network


@jit
def neuron_update(y, current, a, b, c, theta):
    """Returns (potential before reset, potential after reset, spiked)."""
    v = y + (current + a - b * y)
    if v < 0.0:
        v = 0.0
    if v > theta:
        return v, c, True
    return v, v, False


@jit
def stdp_direction(ls_pre, ls_post, theta_ls):
    # +1 potentiation (post fired more recently), -1 depression, 0 no event
    if ls_pre + ls_post > theta_ls and ls_pre != ls_post:
        if ls_post > ls_pre:
            return 1
        return -1
    return 0


@jit
def propagate(n, sign, out_start, syn_f, syn_i, buf, clock):
    depth = buf.shape[1]
    t = clock[0]
    for k in range(out_start[n], out_start[n + 1]):
        buf[syn_i[k, I_POST], (t + 1 + syn_i[k, I_DELAY]) % depth] += sign[n] * syn_f[k, F_W]
    return out_start[n + 1] - out_start[n]


@jit
def apply_plasticity(ls, syn_f, syn_i, theta_ls, dev):
    r_on = dev[D_RON]
    r_off = dev[D_ROFF]
    q_min = dev[D_QMIN]
    for k in range(syn_i.shape[0]):
        kind = syn_i[k, I_KIND]
        if kind == K_CONST:
            continue
        d = stdp_direction(ls[syn_i[k, I_PRE]], ls[syn_i[k, I_POST]], theta_ls)
        if d > 0:
            syn_i[k, I_NPOS] += 1
        elif d < 0:
            syn_i[k, I_NNEG] += 1
        if kind == K_MEM:
            if d == 0:
                continue
            q = syn_f[k, F_Q] + d * syn_f[k, F_DQ]
            if q < q_min:
                q = q_min
            elif q > syn_f[k, F_QMAX]:
                q = syn_f[k, F_QMAX]
            syn_f[k, F_Q] = q
            syn_f[k, F_W] = weight_kernel(q, syn_f[k, F_BETA], syn_i[k, I_DTYPE], syn_f[k, F_SF1],
                                          syn_f[k, F_SF2], r_on, r_off)
        else:
            s_c, w, switched = rsm_kernel(syn_i[k, I_SC], syn_i[k, I_SN], syn_f[k, F_W], d != 0,
                                          dev[D_LRS], dev[D_HRS])
            syn_i[k, I_SC] = s_c
            syn_f[k, F_W] = w
            if switched:
                syn_i[k, I_NSW] += 1


@jit
def decay_ls(ls):
    for i in range(ls.shape[0]):
        if ls[i] > 0:
            ls[i] -= 1


@jit
def decode_action(high_left, high_right):
    if high_left and not high_right:
        return TURN_LEFT
    if high_right and not high_left:
        return TURN_RIGHT
    return FORWARD


@jit
def snn_step(sensors, layer, sign, y, ls, buf, clock, out_start, syn_f, syn_i, nparams, dev, spiked):
    """One of the processing steps inside a timestep.

    Order: integrate, spike and propagate, plasticity, last-spike decay.
    """
    a = nparams[P_A]
    b = nparams[P_B]
    c = nparams[P_C]
    theta = nparams[P_THETA]
    ls_on = int(nparams[P_LS_ON])
    n = y.shape[0]
    depth = buf.shape[1]
    t = clock[0]
    slot = t % depth
    for i in range(n):
        if layer[i] == INPUT:
            current = sensors[i]
        else:
            current = buf[i, slot]
            buf[i, slot] = 0.0
        _, v, sp = neuron_update(y[i], current, a, b, c, theta)
        y[i] = v
        spiked[i] = sp
        if sp:
            ls[i] = ls_on
    for i in range(n):
        if spiked[i]:
            propagate(i, sign, out_start, syn_f, syn_i, buf, clock)
    apply_plasticity(ls, syn_f, syn_i, int(nparams[P_THETA_LS]), dev)
    decay_ls(ls)
    clock[0] = t + 1


@jit(nogil=True)
def snn_timestep(sensors, layer, sign, y, ls, buf, clock, out_start, syn_f, syn_i, nparams, dev, out_counts):
    """Run a full timestep of processing steps and decode the action.

    ``out_counts`` receives the spike count of each of the two output neurons
    (the output window).
    """
    n = y.shape[0]
    spiked = np.zeros(n, dtype=np.bool_)
    out_counts[0] = 0
    out_counts[1] = 0
    first_out = n - 2
    for _ in range(int(nparams[P_STEPS])):
        snn_step(sensors, layer, sign, y, ls, buf, clock, out_start, syn_f, syn_i, nparams, dev, spiked)
        if spiked[first_out]:
            out_counts[0] += 1
        if spiked[first_out + 1]:
            out_counts[1] += 1
    high = nparams[P_HIGH]
    return decode_action(out_counts[0] >= high, out_counts[1] >= high)


# ---------------------------------------------------------------------------
# geometry


@jit
def closest_on_segment(px, py, ax, ay, bx, by):
    ex = bx - ax
    ey = by - ay
    ll = ex * ex + ey * ey
    u = 0.0
    if ll > 0.0:
        u = ((px - ax) * ex + (py - ay) * ey) / ll
        if u < 0.0:
            u = 0.0
        elif u > 1.0:
            u = 1.0
    cx = ax + u * ex
    cy = ay + u * ey
    return cx, cy, math.hypot(px - cx, py - cy)


@jit
def clearance(px, py, walls):
    best = np.inf
    for k in range(walls.shape[0]):
        _, _, d = closest_on_segment(px, py, walls[k, 0], walls[k, 1], walls[k, 2], walls[k, 3])
        if d < best:
            best = d
    return best


@jit
def ray_distance(px, py, dx, dy, walls):
    """Distance along a unit ray to the first wall, ``inf`` if none."""
    best = np.inf
    for k in range(walls.shape[0]):
        ax = walls[k, 0]
        ay = walls[k, 1]
        ex = walls[k, 2] - ax
        ey = walls[k, 3] - ay
        denom = dx * ey - dy * ex
        if abs(denom) < 1e-15:
            continue
        wx = ax - px
        wy = ay - py
        t = (wx * ey - wy * ex) / denom
        u = (wx * dy - wy * dx) / denom
        if t >= 0.0 and -1e-12 <= u <= 1.0 + 1e-12 and t < best:
            best = t
    return best


@jit
def resolve_collisions(px, py, radius, walls):
    """Push the disc out of any wall it penetrates (sliding contact)."""
    for _ in range(4):
        moved = False
        for k in range(walls.shape[0]):
            cx, cy, d = closest_on_segment(px, py, walls[k, 0], walls[k, 1], walls[k, 2], walls[k, 3])
            if d < radius and d > 1e-12:
                px += (px - cx) / d * (radius - d)
                py += (py - cy) / d * (radius - d)
                moved = True
        if not moved:
            break
    return px, py


@jit
def wrap_angle(h):
    return (h + math.pi) % (2.0 * math.pi) - math.pi


@jit
def in_rect(px, py, zones, z):
    return zones[z, 0] <= px and px <= zones[z, 2] and zones[z, 1] <= py and py <= zones[z, 3]


# ---------------------------------------------------------------------------
# robot


@jit
def sense(px, py, h, walls, wp, noise, out):
    """Fill ``out[0:3]`` with light and ``out[3:6]`` with IR readings in [0, 1].

    ``noise`` holds six uniforms in [0, 1).  Returns the two bump flags
    (front-left, front-right).
    """
    r = wp[W_RADIUS]
    lo = wp[W_LRAW_MIN]
    hi = wp[W_LRAW_MAX]
    ir_max = wp[W_IRRAW_MAX]
    ir_range = wp[W_IR_RANGE]
    sat = wp[W_LIGHT_SAT]
    for i in range(3):
        bearing = h + wp[W_B0 + i]
        dx = math.cos(bearing)
        dy = math.sin(bearing)
        # light: inverse square, cosine incidence, saturating
        sx = px + r * dx
        sy = py + r * dy
        lx = wp[W_LX] - sx
        ly = wp[W_LY] - sy
        dist = math.hypot(lx, ly)
        if dist < 1e-12:
            frac = 1.0
        else:
            cos_inc = (dx * lx + dy * ly) / dist
            if cos_inc <= 0.0:
                frac = 0.0
            else:
                frac = cos_inc * (sat / dist) ** 2
                if frac > 1.0:
                    frac = 1.0
        raw = hi - (hi - lo) * frac
        raw *= 1.0 + wp[W_LIGHT_NOISE] * (2.0 * noise[i] - 1.0)
        if raw < lo:
            raw = lo
        elif raw > hi:
            raw = hi
        out[i] = min(max((hi - raw) / (hi - lo), 0.0), 1.0)
        # infrared: distance from the body surface to the first wall on the ray
        gap = ray_distance(px, py, dx, dy, walls) - r
        if gap < 0.0:
            gap = 0.0
        if gap < ir_range:
            raw = ir_max * (1.0 - gap / ir_range)
        else:
            raw = 0.0
        raw *= 1.0 + wp[W_IR_NOISE] * (2.0 * noise[3 + i] - 1.0)
        if raw < 0.0:
            raw = 0.0
        elif raw > ir_max:
            raw = ir_max
        out[3 + i] = min(max(raw / ir_max, 0.0), 1.0)
    left = False
    right = False
    cone = wp[W_CONE]
    for k in range(walls.shape[0]):
        cx, cy, d = closest_on_segment(px, py, walls[k, 0], walls[k, 1], walls[k, 2], walls[k, 3])
        if d > r + CONTACT_TOL:
            continue
        phi = wrap_angle(math.atan2(cy - py, cx - px) - h)
        if abs(phi - cone) <= cone + 1e-12:
            left = True
        if abs(phi + cone) <= cone + 1e-12:
            right = True
    return left, right


@jit
def act(px, py, h, action, u_slip, u_wheel, walls, wp):
    """Differential-drive move for one timestep; returns the new pose."""
    v = wp[W_STEP]
    dl = v
    dr = v
    if action == TURN_LEFT:
        dl = 0.5 * v
    elif action == TURN_RIGHT:
        dr = 0.5 * v
    if u_slip < wp[W_SLIP]:
        if u_wheel < 0.5:
            dl = 0.0
        else:
            dr = 0.0
    ds = 0.5 * (dl + dr)
    dh = (dr - dl) / wp[W_WHEELBASE]
    if abs(dh) < 1e-12:
        nx = px + ds * math.cos(h)
        ny = py + ds * math.sin(h)
    else:
        rad = ds / dh
        nx = px + rad * (math.sin(h + dh) - math.sin(h))
        ny = py - rad * (math.cos(h + dh) - math.cos(h))
    nx, ny = resolve_collisions(nx, ny, wp[W_RADIUS], walls)
    return nx, ny, wrap_angle(h + dh)


@jit
def reverse(px, py, h, walls, wp):
    """Back up along the heading, stopping at first contact."""
    r = wp[W_RADIUS]
    dist = wp[W_REVERSE]
    dx = -math.cos(h)
    dy = -math.sin(h)
    limit = r - PENETRATION_TOL
    travelled = 0.0
    blocked = False
    while travelled < dist:
        step = min(REVERSE_SUBSTEP, dist - travelled)
        if clearance(px + (travelled + step) * dx, py + (travelled + step) * dy, walls) < limit:
            lo = travelled
            hi = travelled + step
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if clearance(px + mid * dx, py + mid * dy, walls) < limit:
                    hi = mid
                else:
                    lo = mid
            travelled = lo
            blocked = True
            break
        travelled += step
    if not blocked:
        travelled = dist
    return px + travelled * dx, py + travelled * dy


# ---------------------------------------------------------------------------
# trial


@jit(nogil=True)
def trial_kernel(layer, sign, y, ls, buf, clock, out_start, syn_f, syn_i, nparams, dev,
                 walls, zones, wp, noise, record, traj, result, w_r1, w_p2):
    """Two-phase T-maze trial.  Network state carries over between phases.

    ``noise`` has 8 uniforms per timestep (6 sensor, slip, wheel choice) and
    at least ``2 * budget`` rows.  ``result`` receives the R_* fields.
    """
    budget = int(wp[W_BUDGET])
    penalty = int(wp[W_PENALTY])
    px = wp[W_START_X]
    py = wp[W_START_Y]
    h = wp[W_START_H]
    sensors = np.zeros(6)
    counts = np.zeros(2, dtype=np.int64)
    phase = 0
    consumed = 0
    c1 = 0
    c2 = 0
    reached1 = False
    reached2 = False
    steps = 0
    bumps = 0
    penalties = 0
    fresh_phase2 = False
    while consumed < budget:
        if fresh_phase2:
            for k in range(syn_f.shape[0]):
                w_p2[k] = syn_f[k, F_W]
            fresh_phase2 = False
        row = noise[steps]
        left, right = sense(px, py, h, walls, wp, row[0:6], sensors)
        action = snn_timestep(sensors, layer, sign, y, ls, buf, clock, out_start, syn_f, syn_i,
                              nparams, dev, counts)
        bump = left or right
        if bump:
            px, py = reverse(px, py, h, walls, wp)
            consumed += 1 + penalty
            bumps += 1
            penalties += penalty
        else:
            px, py, h = act(px, py, h, action, row[6], row[7], walls, wp)
            consumed += 1
        if record:
            traj[steps, T_STEP] = steps
            traj[steps, T_X] = px
            traj[steps, T_Y] = py
            traj[steps, T_H] = h
            traj[steps, T_ACTION] = action
            traj[steps, T_PHASE] = phase
            traj[steps, T_BUMP] = 1.0 if bump else 0.0
        steps += 1
        if consumed > budget:
            break
        if phase == 0 and in_rect(px, py, zones, 1):
            reached1 = True
            c1 = consumed
            for k in range(syn_f.shape[0]):
                w_r1[k] = syn_f[k, F_W]
            phase = 1
            consumed = 0
            px = wp[W_START_X]
            py = wp[W_START_Y]
            h = wp[W_START_H]
            fresh_phase2 = True
        elif phase == 1 and in_rect(px, py, zones, 2):
            reached2 = True
            c2 = consumed
            break
    if not reached1:
        fitness = 2 * budget
    elif reached2:
        fitness = c1 + c2
    else:
        fitness = c1 + budget
    result[R_FITNESS] = fitness
    result[R_C1] = c1
    result[R_C2] = c2
    result[R_REACHED1] = 1 if reached1 else 0
    result[R_REACHED2] = 1 if reached2 else 0
    result[R_TIMESTEPS] = steps
    result[R_BUMPS] = bumps
    result[R_PENALTY] = penalties
