"""Compiled inner loops: chain evaluation, gradient flows and loop geometry.

Everything here works on plain float arrays so the public modules can keep
their dataclass surface while the hot paths run without interpreter overhead.
"""

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi

# integrator status codes
CONVERGED = 0
MAX_STEPS = 1
SADDLE = 2
SINGULAR = 3
LEFT_FREE = 4
REVERSAL = -0.5  # cosine between consecutive directions that flags a saddle
STALL = 0.25  # fraction of the step below which an RK4 step counts as stalled
ESCAPE_FRAC = 0.5  # step cap relative to the distance from an escaped saddle

# stage kinds
INNER = 0
OUTER = 1


@njit(cache=True)
def squircle_beta(params, x, y):
    """params = (cx, cy, cos, sin, 2/w, 2/h, kappa)."""
    dx = x - params[0]
    dy = y - params[1]
    u = (dx * params[2] + dy * params[3]) * params[4]
    v = (-dx * params[3] + dy * params[2]) * params[5]
    n = u * u + v * v
    k = params[6]
    rad = n * n - 4.0 * k * k * u * u * v * v
    if rad < 0.0:
        rad = 0.0
    return 0.5 * (n + math.sqrt(rad)) - 1.0


@njit(cache=True)
def free_margin(obstacles, boundary, x, y):
    m = -squircle_beta(boundary, x, y)
    for i in range(obstacles.shape[0]):
        b = squircle_beta(obstacles[i], x, y)
        if b < m:
            m = b
    return m


@njit(cache=True)
def spline_eval(coef, theta):
    n = coef.shape[1]
    h = TWO_PI / n
    i = int(theta / h)
    if i >= n:
        i = n - 1
    if i < 0:
        i = 0
    d = theta - i * h
    return ((coef[0, i] * d + coef[1, i]) * d + coef[2, i]) * d + coef[3, i]


@njit(cache=True)
def _switch(x, lam):
    if x <= 0.0:
        return 1.0
    if x >= 1.0:
        return 0.0
    return math.exp(-lam * x / (1.0 - x))


@njit(cache=True)
def _smoothstep(u):
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    a = math.exp(-1.0 / u)
    b = math.exp(-1.0 / (1.0 - u))
    return a / (a + b)


@njit(cache=True)
def _apply_stage(s, x, y, centers, kinds, src, tgt, margins, lams, ramps, guards, guard_params):
    g = guards[s]
    if g >= 0 and squircle_beta(guard_params[g], x, y) < 0.0:
        return x, y
    dx = x - centers[s, 0]
    dy = y - centers[s, 1]
    t = math.sqrt(dx * dx + dy * dy)
    if t == 0.0:
        return x, y
    theta = math.atan2(dy, dx)
    if theta < 0.0:
        theta += TWO_PI
    r_src = spline_eval(src[s], theta)
    r_tgt = spline_eval(tgt[s], theta)
    if kinds[s] == INNER:
        xi = (t / r_src - 1.0) / margins[s]
    else:
        xi = (1.0 - t / r_src) / margins[s]
    sigma = _switch(xi, lams[s])
    if sigma == 0.0:
        return x, y
    k = r_tgt / r_src
    eps = ramps[s]
    if eps > 0.0:
        d = 1.0 - k
        if d <= 0.0:
            k = 1.0
        elif d < eps:
            k = 1.0 - d * _smoothstep(d / eps)
    factor = 1.0 + sigma * (k - 1.0)
    return centers[s, 0] + factor * dx, centers[s, 1] + factor * dy


@njit(cache=True)
def chain_point(x, y, s0, s1, psi_on, centers, kinds, src, tgt, margins, lams, ramps,
                guards, guard_params, q0, rho0):
    for s in range(s0, s1):
        x, y = _apply_stage(s, x, y, centers, kinds, src, tgt, margins, lams, ramps,
                            guards, guard_params)
    if psi_on:
        dx = x - q0[0]
        dy = y - q0[1]
        r = math.sqrt(dx * dx + dy * dy)
        if r >= rho0:
            return math.nan, math.nan
        f = rho0 / (rho0 - r)
        x = q0[0] + f * dx
        y = q0[1] + f * dy
    return x, y


@njit(cache=True)
def chain_many(points, s0, s1, psi_on, centers, kinds, src, tgt, margins, lams, ramps,
               guards, guard_params, q0, rho0):
    out = np.empty_like(points)
    for i in range(points.shape[0]):
        out[i, 0], out[i, 1] = chain_point(points[i, 0], points[i, 1], s0, s1, psi_on,
                                           centers, kinds, src, tgt, margins, lams, ramps,
                                           guards, guard_params, q0, rho0)
    return out


@njit(cache=True)
def chain_jacobian(x, y, h, n_stages, centers, kinds, src, tgt, margins, lams, ramps,
                   guards, guard_params, q0, rho0):
    jac = np.empty((2, 2))
    ax, ay = chain_point(x + h, y, 0, n_stages, True, centers, kinds, src, tgt, margins,
                         lams, ramps, guards, guard_params, q0, rho0)
    bx, by = chain_point(x - h, y, 0, n_stages, True, centers, kinds, src, tgt, margins,
                         lams, ramps, guards, guard_params, q0, rho0)
    jac[0, 0] = (ax - bx) / (2.0 * h)
    jac[1, 0] = (ay - by) / (2.0 * h)
    ax, ay = chain_point(x, y + h, 0, n_stages, True, centers, kinds, src, tgt, margins,
                         lams, ramps, guards, guard_params, q0, rho0)
    bx, by = chain_point(x, y - h, 0, n_stages, True, centers, kinds, src, tgt, margins,
                         lams, ramps, guards, guard_params, q0, rho0)
    jac[0, 1] = (ax - bx) / (2.0 * h)
    jac[1, 1] = (ay - by) / (2.0 * h)
    return jac


@njit(cache=True)
def chain_jacobian_many(points, h, n_stages, centers, kinds, src, tgt, margins, lams, ramps,
                        guards, guard_params, q0, rho0):
    out = np.empty((points.shape[0], 2, 2))
    for i in range(points.shape[0]):
        out[i] = chain_jacobian(points[i, 0], points[i, 1], h, n_stages, centers, kinds, src,
                                tgt, margins, lams, ramps, guards, guard_params, q0, rho0)
    return out


# --------------------------------------------------------------------------- point world


@njit(cache=True)
def point_grad(x, y, goal, obstacles, weights):
    """Gradient of w_g ln|q-q_g|^2 - sum w_i ln|q-P_i|^2."""
    dx = x - goal[0]
    dy = y - goal[1]
    r2 = dx * dx + dy * dy
    gx = 2.0 * weights[0] * dx / r2
    gy = 2.0 * weights[0] * dy / r2
    for i in range(obstacles.shape[0]):
        dx = x - obstacles[i, 0]
        dy = y - obstacles[i, 1]
        r2 = dx * dx + dy * dy
        gx -= 2.0 * weights[i + 1] * dx / r2
        gy -= 2.0 * weights[i + 1] * dy / r2
    return gx, gy


@njit(cache=True)
def _point_dir(x, y, goal, obstacles, weights):
    gx, gy = point_grad(x, y, goal, obstacles, weights)
    n = math.sqrt(gx * gx + gy * gy)
    if n == 0.0 or not math.isfinite(n):
        return 0.0, 0.0, n
    return -gx / n, -gy / n, n


@njit(cache=True)
def _nearest(x, y, obstacles):
    d = math.inf
    for i in range(obstacles.shape[0]):
        dd = math.hypot(x - obstacles[i, 0], y - obstacles[i, 1])
        if dd < d:
            d = dd
    return d


@njit(cache=True)
def integrate_point(start, goal, obstacles, weights, step, max_step, rel_step, adaptive,
                    goal_tol, max_steps, saddle_tol, anchor, out):
    """RK4 on the normalized negative gradient; fills ``out`` and returns (count, status).

    Steps stay below ``ESCAPE_FRAC`` times the distance to ``anchor`` (a
    saddle being escaped); a NaN anchor disables the cap.
    """
    x = start[0]
    y = start[1]
    out[0, 0] = x
    out[0, 1] = y
    count = 1
    px = 0.0
    py = 0.0
    for _ in range(max_steps):
        dg = math.hypot(x - goal[0], y - goal[1])
        if dg < goal_tol:
            return count, CONVERGED
        d_obs = _nearest(x, y, obstacles)
        if d_obs < 1e-12:
            return count, SINGULAR
        k1x, k1y, gn = _point_dir(x, y, goal, obstacles, weights)
        # a reversed direction means the step jumped across a critical point
        if gn < saddle_tol or k1x * px + k1y * py < REVERSAL:
            return count, SADDLE
        px = k1x
        py = k1y
        h = step
        if adaptive:
            near = min(d_obs, dg)
            h = min(max(rel_step * near, step), max_step)
        h = min(h, 0.25 * d_obs)
        if not math.isnan(anchor[0]):
            h = min(h, ESCAPE_FRAC * math.hypot(x - anchor[0], y - anchor[1]))
        k2x, k2y, _ = _point_dir(x + 0.5 * h * k1x, y + 0.5 * h * k1y, goal, obstacles, weights)
        k3x, k3y, _ = _point_dir(x + 0.5 * h * k2x, y + 0.5 * h * k2y, goal, obstacles, weights)
        k4x, k4y, _ = _point_dir(x + h * k3x, y + h * k3y, goal, obstacles, weights)
        dx = h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        dy = h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
        # stages that cancel mean the step straddles a critical point
        if math.hypot(dx, dy) < STALL * h:
            return count, SADDLE
        x += dx
        y += dy
        out[count, 0] = x
        out[count, 1] = y
        count += 1
    if math.hypot(x - goal[0], y - goal[1]) < goal_tol:
        return count, CONVERGED
    return count, MAX_STEPS


# --------------------------------------------------------------------------- forest world


@njit(cache=True)
def _forest_dir(x, y, conjugate, jac_h, n_stages, centers, kinds, src, tgt, margins, lams,
                ramps, guards, guard_params, q0, rho0, goal, pobs, weights):
    qx, qy = chain_point(x, y, 0, n_stages, True, centers, kinds, src, tgt, margins, lams,
                         ramps, guards, guard_params, q0, rho0)
    gx, gy = point_grad(qx, qy, goal, pobs, weights)
    jac = chain_jacobian(x, y, jac_h, n_stages, centers, kinds, src, tgt, margins, lams, ramps,
                         guards, guard_params, q0, rho0)
    if conjugate:
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        dx = -(jac[1, 1] * gx - jac[0, 1] * gy) / det
        dy = -(-jac[1, 0] * gx + jac[0, 0] * gy) / det
    else:
        dx = -(jac[0, 0] * gx + jac[1, 0] * gy)
        dy = -(jac[0, 1] * gx + jac[1, 1] * gy)
    n = math.sqrt(dx * dx + dy * dy)
    if n == 0.0 or not math.isfinite(n):
        return 0.0, 0.0, n
    return dx / n, dy / n, n


@njit(cache=True)
def integrate_forest(start, p_goal, conjugate, step, goal_tol, max_steps, saddle_tol, anchor, jac_h,
                     n_stages, centers, kinds, src, tgt, margins, lams, ramps, guards,
                     guard_params, q0, rho0, goal, pobs, weights, obstacles, boundary, out):
    x = start[0]
    y = start[1]
    out[0, 0] = x
    out[0, 1] = y
    count = 1
    px = 0.0
    py = 0.0
    for _ in range(max_steps):
        if math.hypot(x - p_goal[0], y - p_goal[1]) < goal_tol:
            return count, CONVERGED
        a = (n_stages, centers, kinds, src, tgt, margins, lams, ramps, guards, guard_params,
             q0, rho0, goal, pobs, weights)
        k1x, k1y, gn = _forest_dir(x, y, conjugate, jac_h, *a)
        if gn < saddle_tol or k1x * px + k1y * py < REVERSAL:
            return count, SADDLE
        px = k1x
        py = k1y
        h = step
        if not math.isnan(anchor[0]):
            h = min(h, ESCAPE_FRAC * math.hypot(x - anchor[0], y - anchor[1]))
        accepted = False
        for _retry in range(30):
            k2x, k2y, _ = _forest_dir(x + 0.5 * h * k1x, y + 0.5 * h * k1y, conjugate, jac_h, *a)
            k3x, k3y, _ = _forest_dir(x + 0.5 * h * k2x, y + 0.5 * h * k2y, conjugate, jac_h, *a)
            k4x, k4y, _ = _forest_dir(x + h * k3x, y + h * k3y, conjugate, jac_h, *a)
            nx = x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            ny = y + h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
            if math.isfinite(nx) and math.isfinite(ny) and free_margin(obstacles, boundary, nx, ny) > 0.0:
                accepted = True
                break
            h *= 0.5
        if not accepted:
            return count, LEFT_FREE
        if math.hypot(nx - x, ny - y) < STALL * h:
            return count, SADDLE
        x = nx
        y = ny
        out[count, 0] = x
        out[count, 1] = y
        count += 1
    if math.hypot(x - p_goal[0], y - p_goal[1]) < goal_tol:
        return count, CONVERGED
    return count, MAX_STEPS


# --------------------------------------------------------------------------- loop geometry


@njit(cache=True)
def winding_numbers(loop, points):
    """Total signed angle / 2pi swept by the closed polyline ``loop`` around each point."""
    m = points.shape[0]
    out = np.zeros(m)
    k = loop.shape[0]
    for j in range(m):
        total = 0.0
        px = points[j, 0]
        py = points[j, 1]
        for i in range(k):
            ax = loop[i, 0] - px
            ay = loop[i, 1] - py
            nxt = (i + 1) % k
            bx = loop[nxt, 0] - px
            by = loop[nxt, 1] - py
            total += math.atan2(ax * by - ay * bx, ax * bx + ay * by)
        out[j] = total / TWO_PI
    return out


@njit(cache=True)
def min_segment_distances(path, points):
    """Distance from each point to the polyline ``path`` (open)."""
    m = points.shape[0]
    out = np.empty(m)
    for j in range(m):
        px = points[j, 0]
        py = points[j, 1]
        best = math.hypot(path[0, 0] - px, path[0, 1] - py)
        for i in range(path.shape[0] - 1):
            ax = path[i, 0]
            ay = path[i, 1]
            ex = path[i + 1, 0] - ax
            ey = path[i + 1, 1] - ay
            ll = ex * ex + ey * ey
            u = 0.0
            if ll > 0.0:
                u = ((px - ax) * ex + (py - ay) * ey) / ll
                if u < 0.0:
                    u = 0.0
                elif u > 1.0:
                    u = 1.0
            d = math.hypot(ax + u * ex - px, ay + u * ey - py)
            if d < best:
                best = d
        out[j] = best
    return out
