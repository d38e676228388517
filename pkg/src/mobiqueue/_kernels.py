"""Compiled inner loops for the tick-level simulation."""

import math

import numpy as np
from numba import njit

from .channel import BOUNDED, POWER_LAW
from .queueing import INDICATOR, TRUNCATED

LN2 = math.log(2.0)


@njit(cache=True, inline="always")
def path_loss(code, par, r):
    if code == BOUNDED:
        u = 1.0 + r
        if par[0] == 4.0:
            u *= u
            return 1.0 / (u * u)
        return u ** -par[0]
    if code == POWER_LAW:
        u = par[0] * max(r, par[2])
        if par[1] == 4.0:
            u *= u
            return 1.0 / (u * u)
        return u ** -par[1]
    # table: first half distances, second half gains
    m = par.size // 2
    if r >= par[m - 1]:
        return 0.0
    k = np.searchsorted(par[:m], r, side="right") - 1
    t = (r - par[k]) / (par[k + 1] - par[k])
    return par[m + k] + t * (par[m + k + 1] - par[m + k])


@njit(cache=True, inline="always")
def wrap(x, side):
    if x >= side:
        x -= side
        if x >= side:
            x = x % side
    elif x < 0.0:
        x += side
        if x < 0.0 or x >= side:
            x = x % side
    return x


@njit(cache=True, inline="always")
def image(d, side):
    d = abs(d)
    if d > 0.5 * side:
        d = side - d
    return d


@njit(cache=True, inline="always")
def rate_of(policy, threshold, sinr):
    if policy == INDICATOR:
        return 1.0 if sinr > threshold else 0.0
    if policy == TRUNCATED and not sinr > threshold:
        return 0.0
    return math.log1p(sinr) / LN2


@njit(cache=True)
def single_chunk(px, py, head, state, side, model, speed, leg, angles, steps,
                 pl_code, pl_par, l_signal, noise, policy, threshold, conditional, s_cond, inter_rate,
                 coherence, det_fades, sig_fades, int_fades, uniforms,
                 tick, tps, arrivals, W_out, V_out, I_rec, S_rec, record):
    """Advance ``len(arrivals)`` slots.

    ``state`` holds [workload, time to next leg end, global tick, fade row,
    angle row]; it is updated in place so chunks chain seamlessly.
    """
    n = px.size
    W = state[0]
    timer = state[1]
    gtick = int(state[2])
    row = int(state[3])
    arow = int(state[4])
    k = 0
    cx = np.empty(n)
    cy = np.empty(n)
    for j in range(n):
        cx[j] = speed * math.cos(head[j])
        cy[j] = speed * math.sin(head[j])
    for slot in range(arrivals.size):
        acc = 0.0
        for _ in range(tps):
            if gtick % coherence == 0:
                row += 1
            # interference at the origin, compensated summation in index order
            total = 0.0
            comp = 0.0
            logp = 0.0
            for j in range(n):
                dx = image(px[j], side)
                dy = image(py[j], side)
                g = path_loss(pl_code, pl_par, math.sqrt(dx * dx + dy * dy))
                if conditional:
                    if det_fades:
                        logp -= s_cond * g
                    else:
                        logp -= math.log1p(s_cond * g / inter_rate)
                    continue
                if not det_fades:
                    g *= int_fades[row, j]
                t = total + g
                if abs(total) >= abs(g):
                    comp += (total - t) + g
                else:
                    comp += (g - t) + total
                total = t
            if conditional:
                p = math.exp(logp - s_cond * noise)
                r = 1.0 if uniforms[k] < p else 0.0
                interference = math.nan
                sinr = math.nan
            else:
                interference = total + comp
                den = interference + noise
                num = l_signal * sig_fades[row]
                if den > 0.0:
                    sinr = num / den
                elif num > 0.0:
                    sinr = math.inf
                else:
                    sinr = math.nan
                r = rate_of(policy, threshold, sinr) if sinr == sinr else 0.0
            if record:
                I_rec[k] = interference
                S_rec[k] = sinr
            acc += r
            # motion: 1 random direction, 2 waypoint, 3 Brownian
            if model == 1:
                for j in range(n):
                    px[j] = wrap(px[j] + cx[j] * tick, side)
                    py[j] = wrap(py[j] + cy[j] * tick, side)
            elif model == 2:
                rem = tick
                while rem > 0.0:
                    step = min(rem, timer)
                    for j in range(n):
                        px[j] += cx[j] * step
                        py[j] += cy[j] * step
                    rem -= step
                    timer -= step
                    if timer <= 1e-12 * leg:
                        for j in range(n):
                            head[j] = angles[arow, j]
                            cx[j] = speed * math.cos(head[j])
                            cy[j] = speed * math.sin(head[j])
                        arow += 1
                        timer = leg
                    if rem <= 1e-12 * leg:
                        rem = 0.0
                for j in range(n):
                    px[j] = wrap(px[j], side)
                    py[j] = wrap(py[j], side)
            elif model == 3:
                for j in range(n):
                    px[j] = wrap(px[j] + steps[k, j, 0], side)
                    py[j] = wrap(py[j] + steps[k, j, 1], side)
            gtick += 1
            k += 1
        V = acc * tick
        W = W + arrivals[slot] - V
        if W < 0.0:
            W = 0.0
        W_out[slot] = W
        V_out[slot] = V
    state[0] = W
    state[1] = timer
    state[2] = gtick
    state[3] = row
    state[4] = arow


@njit(cache=True)
def interacting_slot(tx, ty, rx, ry, moving, head, state, side, model, speed, leg, angles, steps,
                     pl_code, pl_par, l_signal, noise, policy, threshold, conditional, s_cond,
                     det_fades, inter_rate, sig_fades, int_fades, uniforms, tick, tps,
                     remaining, V_out):
    """One slot of the interacting system.

    ``remaining`` enters as workload plus this slot's arrivals and leaves as
    the new workload. Pairs move rigidly; pairs with ``moving == 0`` stay put.
    """
    n = tx.size
    timer = state[0]
    arow = int(state[1])
    active = np.empty(n, dtype=np.bool_)
    acc = np.zeros(n)
    for k in range(tps):
        for i in range(n):
            active[i] = remaining[i] > 0.0
        for i in range(n):
            logp = 0.0
            prod = 1.0
            total = 0.0
            for j in range(n):
                if j == i or not active[j]:
                    continue
                dx = image(tx[j] - rx[i], side)
                dy = image(ty[j] - ry[i], side)
                g = path_loss(pl_code, pl_par, math.sqrt(dx * dx + dy * dy))
                if conditional:
                    if det_fades:
                        logp -= s_cond * g
                    else:
                        prod *= 1.0 + s_cond * g / inter_rate
                        if prod > 1e200:
                            logp -= math.log(prod)
                            prod = 1.0
                else:
                    if not det_fades:
                        g *= int_fades[k, i, j]
                    total += g
            if conditional:
                p = math.exp(logp - math.log(prod) - s_cond * noise)
                r = 1.0 if uniforms[k, i] < p else 0.0
            else:
                den = total + noise
                num = l_signal * sig_fades[k, i]
                if den > 0.0:
                    sinr = num / den
                elif num > 0.0:
                    sinr = math.inf
                else:
                    sinr = 0.0
                r = rate_of(policy, threshold, sinr)
            acc[i] += r
            if active[i]:
                remaining[i] = max(remaining[i] - r * tick, 0.0)
        if model == 1 or model == 2:
            rem = tick
            while rem > 0.0:
                step = min(rem, timer) if model == 2 else rem
                for j in range(n):
                    if moving[j]:
                        ddx = speed * step * math.cos(head[j])
                        ddy = speed * step * math.sin(head[j])
                        tx[j] += ddx
                        ty[j] += ddy
                        rx[j] += ddx
                        ry[j] += ddy
                rem -= step
                if model == 2:
                    timer -= step
                    if timer <= 1e-12 * leg:
                        for j in range(n):
                            head[j] = angles[arow, j]
                        arow += 1
                        timer = leg
                if rem <= 1e-12 * tick:
                    rem = 0.0
        elif model == 3:
            for j in range(n):
                if moving[j]:
                    tx[j] += steps[k, j, 0]
                    ty[j] += steps[k, j, 1]
                    rx[j] += steps[k, j, 0]
                    ry[j] += steps[k, j, 1]
        for j in range(n):
            tx[j] = wrap(tx[j], side)
            ty[j] = wrap(ty[j], side)
            rx[j] = wrap(rx[j], side)
            ry[j] = wrap(ry[j], side)
    for i in range(n):
        V_out[i] = acc[i] * tick
    state[0] = timer
    state[1] = arow
