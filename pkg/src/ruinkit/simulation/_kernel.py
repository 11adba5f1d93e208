"""Compiled per-path loop. Every random draw is a pure function of (seed, stream, path, counter)."""

import math

import numba as nb
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
S30 = np.uint64(30)
S27 = np.uint64(27)
S31 = np.uint64(31)
S11 = np.uint64(11)
TWO53 = 1.0 / 9007199254740992.0

STREAM_NORMAL = np.uint64(1)
STREAM_BRIDGE = np.uint64(2)
STREAM_DEATH = np.uint64(3)
STREAM_FINE = np.uint64(4)
STREAM_FINE_BRIDGE = np.uint64(5)

ALIVE = 0
RUINED = 1
SAFE = 2
FLOOR = 3
NONFINITE = 4
CAPPED = 5


@nb.njit(inline="always")
def _fmix(z):
    z = (z ^ (z >> S30)) * MIX1
    z = (z ^ (z >> S27)) * MIX2
    return z ^ (z >> S31)


@nb.njit(inline="always")
def stream_key(seed, stream, path):
    return _fmix(_fmix(seed ^ _fmix(stream * GOLDEN)) + np.uint64(path) * GOLDEN)


@nb.njit(inline="always")
def uniform(key, counter):
    """Uniform on (0, 1): the counter-th output of a splitmix64 sequence started at key."""
    z = _fmix(key + (np.uint64(counter) + np.uint64(1)) * GOLDEN)
    return (float(z >> S11) + 0.5) * TWO53


@nb.njit(inline="always")
def inv_norm(p):
    """Standard normal quantile, Wichura's AS241 (relative error ~1e-16)."""
    q = p - 0.5
    if abs(q) <= 0.425:
        t = 0.180625 - q * q
        num = (
            (
                (
                    (
                        (
                            (2509.0809287301226727 * t + 33430.575583588128105) * t
                            + 67265.770927008700853
                        )
                        * t
                        + 45921.953931549871457
                    )
                    * t
                    + 13731.693765509461125
                )
                * t
                + 1971.5909503065514427
            )
            * t
            + 133.14166789178437745
        ) * t + 3.387132872796366608
        den = (
            (
                (
                    (
                        (
                            (5226.495278852854561 * t + 28729.085735721942674) * t
                            + 39307.89580009271061
                        )
                        * t
                        + 21213.794301586595867
                    )
                    * t
                    + 5394.1960214247511077
                )
                * t
                + 687.1870074920579083
            )
            * t
            + 42.313330701600911252
        ) * t + 1.0
        return q * num / den
    t = p if q <= 0.0 else 1.0 - p
    t = math.sqrt(-math.log(t))
    if t <= 5.0:
        t -= 1.6
        num = (
            (
                (
                    (
                        (
                            (7.7454501427834140764e-4 * t + 0.0227238449892691845833) * t
                            + 0.24178072517745061177
                        )
                        * t
                        + 1.27045825245236838258
                    )
                    * t
                    + 3.64784832476320460504
                )
                * t
                + 5.7694972214606914055
            )
            * t
            + 4.6303378461565452959
        ) * t + 1.42343711074968357734
        den = (
            (
                (
                    (
                        (
                            (1.05075007164441684324e-9 * t + 5.475938084995344946e-4) * t
                            + 0.0151986665636164571966
                        )
                        * t
                        + 0.14810397642748007459
                    )
                    * t
                    + 0.68976733498510000455
                )
                * t
                + 1.6763848301838038494
            )
            * t
            + 2.05319162663775882187
        ) * t + 1.0
    else:
        t -= 5.0
        num = (
            (
                (
                    (
                        (
                            (2.01033439929228813265e-7 * t + 2.71155556874348757815e-5) * t
                            + 0.0012426609473880784386
                        )
                        * t
                        + 0.026532189526576123093
                    )
                    * t
                    + 0.29656057182850489123
                )
                * t
                + 1.7848265399172913358
            )
            * t
            + 5.4637849111641143699
        ) * t + 6.6579046435011037772
        den = (
            (
                (
                    (
                        (
                            (2.04426310338993978564e-15 * t + 1.4215117583164458887e-7) * t
                            + 1.8463183175100546818e-5
                        )
                        * t
                        + 7.868691311456132591e-4
                    )
                    * t
                    + 0.0148753612908506148525
                )
                * t
                + 0.13692988092273580531
            )
            * t
            + 0.59983220655588793769
        ) * t + 1.0
    x = num / den
    return -x if q < 0.0 else x


@nb.njit(inline="always")
def normal(key, k):
    """Standard normal for step k by inversion of the k-th uniform."""
    return inv_norm(uniform(key, k))


@nb.njit(inline="always")
def lookup(nodes, values, w, linear_left):
    n = nodes.shape[0]
    if w < nodes[0]:
        if linear_left and n > 1:
            slope = (values[1] - values[0]) / (nodes[1] - nodes[0])
            return values[0] + slope * (w - nodes[0])
        return values[0]
    if w >= nodes[n - 1]:
        return values[n - 1]
    lo, hi = 0, n - 1  # nodes[lo] <= w < nodes[hi]
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if nodes[mid] <= w:
            lo = mid
        else:
            hi = mid
    x0, x1 = nodes[lo], nodes[hi]
    return values[lo] + (values[hi] - values[lo]) * (w - x0) / (x1 - x0)


# a bridge crossing with probability below exp(-SKIP) cannot be drawn: U >= 2**-54
SKIP = 40.0
# refinement near strategy jumps: substeps keep 4 * vol * sqrt(h) below the distance to the jump
FINE_WIDTH = 2.0
FINE_FLOOR = 1.0 / 1024.0


@nb.njit(inline="always")
def _settle(w1, low, mn, ruin_level, ruin_first, floor, safe):
    """Apply absorption rules to a step ending at w1 with path minimum low.

    Returns (status or -1 to continue, running min, wealth).
    """
    if low <= ruin_level and ruin_first:
        return RUINED, min(mn, low), w1
    if low <= floor:
        return FLOOR, min(mn, floor), floor
    if low < mn:
        mn = low
    if w1 >= safe:
        return SAFE, mn, safe
    return -1, mn, w1


@nb.njit(inline="always")
def _euler(w, h, sq_h, z, key_b, ctr, level, bridge, pi, mu, r, sigma, c):
    """One Euler step; low is +inf when the bridge provably stays above ``level``."""
    vol = sigma * pi
    w1 = w + (r * w + (mu - r) * pi - c) * h + vol * sq_h * z
    v2h = vol * vol * h
    if w1 > level and (not bridge or v2h == 0.0 or 2.0 * (w - level) * (w1 - level) > SKIP * v2h):
        return w1, math.inf
    if bridge and v2h != 0.0:
        d = w1 - w
        return w1, 0.5 * (w + w1 - math.sqrt(d * d - 2.0 * v2h * math.log(uniform(key_b, ctr))))
    return w1, min(w, w1)


@nb.njit(inline="always")
def _jump_distance(jumps, w):
    d = math.inf
    for j in range(jumps.shape[0]):
        d = min(d, abs(w - jumps[j]))
    return d


@nb.njit(parallel=True, cache=True)
def run_paths(
    n_paths,
    w0,
    m0,
    mu,
    r,
    sigma,
    c,
    lam,
    nodes,
    values,
    linear_left,
    jumps,
    slope,
    dt,
    horizon,
    seed,
    ruin_level,
    floor,
    antithetic,
    bridge,
    status,
    m_out,
    w_out,
    tau_out,
):
    safe = c / r
    exact = not math.isnan(slope)
    s_log = sigma * slope
    a_log = r - (mu - r) * slope
    ruin_first = ruin_level >= floor
    refine = jumps.shape[0] > 0 and not exact
    sq_dt = math.sqrt(dt)
    for path in nb.prange(n_paths):
        base = path // 2 if antithetic else path
        sign = -1.0 if (antithetic and path % 2 == 1) else 1.0
        key_n = stream_key(seed, STREAM_NORMAL, base)
        key_b = stream_key(seed, STREAM_BRIDGE, base)
        key_d = stream_key(seed, STREAM_DEATH, base)
        key_f = stream_key(seed, STREAM_FINE, base)
        key_fb = stream_key(seed, STREAM_FINE_BRIDGE, base)
        fine = 0
        tau = -math.log(uniform(key_d, 0)) / lam
        tau_out[path] = tau

        T = min(tau, horizon)
        w = w0
        mn = m0
        st = CAPPED if tau > horizon else ALIVE
        if ruin_first and mn <= ruin_level:
            st = RUINED
            n_steps = -1
        elif w >= safe:
            st = SAFE
            n_steps = -1
        else:
            n_steps = int(T / dt)
        last = T - n_steps * dt
        # lowest level whose crossing matters: the running minimum, or the floor above it
        level = max(mn, floor)
        lz = math.log(safe - w) if (exact and w < safe) else 0.0
        l_level = math.log(safe - level) if exact else 0.0
        k = 0
        while k <= n_steps:
            if k < n_steps:
                h, sq_h = dt, sq_dt
            else:
                h = last
                if h <= 0.0:
                    break
                sq_h = math.sqrt(h)
            z = sign * normal(key_n, k)
            if exact:
                lz1 = lz + (a_log - 0.5 * s_log * s_log) * h - s_log * sq_h * z
                if not math.isfinite(lz1):
                    st = NONFINITE
                    w = safe - math.exp(lz1)
                    break
                v2h = s_log * s_log * h
                gap = (l_level - lz) * (l_level - lz1)
                if lz1 < l_level and (not bridge or v2h == 0.0 or 2.0 * gap > SKIP * v2h):
                    lz = lz1
                    k += 1
                    continue
                if bridge:
                    d = lz1 - lz
                    top = 0.5 * (
                        lz + lz1 + math.sqrt(d * d - 2.0 * v2h * math.log(uniform(key_b, k)))
                    )
                else:
                    top = max(lz, lz1)
                lz = lz1
                code, mn, w = _settle(
                    safe - math.exp(lz1),
                    safe - math.exp(top),
                    mn,
                    ruin_level,
                    ruin_first,
                    floor,
                    safe,
                )
                if code >= 0:
                    st = code
                    break
                level = max(mn, floor)
                l_level = math.log(safe - level)
                k += 1
                continue

            pi = lookup(nodes, values, w, linear_left)
            vol = abs(sigma * pi)
            if refine and FINE_WIDTH * vol * sq_h > _jump_distance(jumps, w):
                left = h
                code = -1
                while left > 0.0:
                    pi = lookup(nodes, values, w, linear_left)
                    vol = abs(sigma * pi)
                    dist = _jump_distance(jumps, w)
                    hs = h if vol == 0.0 else (dist / (FINE_WIDTH * vol)) ** 2
                    hs = min(max(hs, FINE_FLOOR * h), left)
                    if left - hs < 1e-12 * h:
                        hs = left
                    zf = sign * normal(key_f, fine)
                    w1, low = _euler(
                        w, hs, math.sqrt(hs), zf, key_fb, fine, level, bridge, pi, mu, r, sigma, c
                    )
                    fine += 1
                    left -= hs
                    if not math.isfinite(w1):
                        code = NONFINITE
                        w = w1
                        break
                    code, mn, w = _settle(w1, low, mn, ruin_level, ruin_first, floor, safe)
                    if code >= 0:
                        break
                    level = max(mn, floor)
                if code >= 0:
                    st = code
                    break
                k += 1
                continue

            w1, low = _euler(w, h, sq_h, z, key_b, k, level, bridge, pi, mu, r, sigma, c)
            if not math.isfinite(w1):
                st = NONFINITE
                w = w1
                break
            code, mn, w = _settle(w1, low, mn, ruin_level, ruin_first, floor, safe)
            if code >= 0:
                st = code
                break
            level = max(mn, floor)
            k += 1
        if (
            exact
            and st != FLOOR
            and st != NONFINITE
            and st != SAFE
            and st != RUINED
            and n_steps >= 0
        ):
            w = safe - math.exp(lz)
        status[path] = st
        m_out[path] = mn
        w_out[path] = w
