"""Structure selection by Fisher distance and projected-gradient weight optimization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InfeasibleInit, InfeasiblePerturbation
from .flow import IntegrationConfig, integrate_point_path
from .geometry import ForestWorld
from .potential import WeightVector, halfspace_slack, is_feasible
from .topology import DSignature, d_signature
from .transform import SPHERE_INFLATION, PointWorld, root_points

# rounding allowance when a perturbation lands exactly on the margin
PERTURB_TOL = 1e-12


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 0.01
    margin: float = 0.1
    fd_step: float = 1e-2
    grad_threshold: float = 1e-4
    max_iters: int = 1000
    fisher_epsilon: float = 1e-9
    # stop as soon as the path's sign vector equals the target's
    stop_on_match: bool = False

    def __post_init__(self):
        for name in ("step_size", "margin", "fd_step", "grad_threshold", "max_iters", "fisher_epsilon"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.margin >= 1:
            raise ValueError("margin must be below 1")


@dataclass
class OptimizationTrace:
    iterates: list = field(default_factory=list)  # (WeightVector, DSignature, objective)
    terminated_by: str = "max_iters"
    discontinuity_iters: list = field(default_factory=list)

    @property
    def final_signature(self) -> DSignature:
        return self.iterates[-1][1]

    @property
    def objectives(self) -> np.ndarray:
        return np.array([it[2] for it in self.iterates])


def _fisher_points(points: np.ndarray, signs, eps: float) -> float:
    signs = np.asarray(signs)
    g1, g2 = points[signs == -1], points[signs == 1]
    if len(g1) == 0 or len(g2) == 0:
        return math.inf
    spread = np.sum(np.var(g1, axis=0)) + np.sum(np.var(g2, axis=0))
    return float(np.sum((g1.mean(axis=0) - g2.mean(axis=0)) ** 2) / (spread + eps))


def fisher_distance(world: PointWorld, target: DSignature, cfg: OptimizerConfig = OptimizerConfig()) -> float:
    """Squared separation of the sign groups' means over the sum of their total variances."""
    return _fisher_points(world.points_array, target.signs, cfg.fisher_epsilon)


def select_structure(forests: Sequence[ForestWorld], target: DSignature,
                     cfg: OptimizerConfig = OptimizerConfig(),
                     sphere_inflation: float = SPHERE_INFLATION) -> tuple[ForestWorld, float]:
    """Structure whose point world best separates the target's sign groups (first on ties)."""
    best, best_j = None, -math.inf
    for forest in forests:
        j = _fisher_points(root_points(forest, sphere_inflation), target.signs, cfg.fisher_epsilon)
        if j > best_j:
            best, best_j = forest, j
    if best is None:
        raise ValueError("no forests to choose from")
    return best, best_j


def project_weights(w_raw: WeightVector, cfg: OptimizerConfig = OptimizerConfig(),
                    margin: float | None = None) -> WeightVector:
    """Euclidean projection onto ``{w_i >= eta, w_g - sum(w_i) >= 1 + eta}``.

    Solved from the KKT conditions: with multiplier ``mu`` of the halfspace,
    ``w_g = r_g + mu`` and ``w_i = max(eta, r_i - mu)``; the halfspace
    residual is increasing and piecewise linear in ``mu``.
    """
    eta = cfg.margin if margin is None else margin
    r = w_raw.as_array()
    rg, ri = r[0], r[1:]
    w = np.maximum(r, eta)
    if halfspace_slack(w) >= eta:
        return WeightVector.from_array(w)
    # on each interval between breakpoints the set of unclamped w_i is fixed
    slack = ri - eta
    edges = [0.0] + sorted(b for b in slack if b > 0.0) + [math.inf]
    for lo, hi in zip(edges[:-1], edges[1:]):
        free = slack >= hi
        k = int(np.sum(free))
        mu = (1.0 + eta + (len(ri) - k) * eta + np.sum(ri[free]) - rg) / (1.0 + k)
        if lo <= mu <= hi:
            break
    out = np.concatenate([[rg + mu], np.maximum(eta, ri - mu)])
    # absorb rounding so the halfspace holds exactly
    while halfspace_slack(out) < eta:
        out[0] = np.nextafter(out[0], math.inf)
    return WeightVector.from_array(out)


def path_signature(world: PointWorld, w: WeightVector, icfg: IntegrationConfig) -> DSignature:
    return d_signature(world, integrate_point_path(world, w, world.start, icfg))


def dsig_jacobian(world: PointWorld, w: WeightVector, m: int, cfg: OptimizerConfig = OptimizerConfig(),
                  icfg: IntegrationConfig = IntegrationConfig()) -> np.ndarray:
    """Central differences of the signed D-signature; column 0 is the goal weight."""
    if m == 0:
        return np.zeros((0, 1))
    base = w.as_array()
    jac = np.empty((m, len(base)))
    for j in range(len(base)):
        cols = []
        for sgn in (1.0, -1.0):
            shifted = base.copy()
            shifted[j] += sgn * cfg.fd_step
            wj = WeightVector.from_array(shifted)
            if not is_feasible(wj, cfg.margin - PERTURB_TOL):
                raise InfeasiblePerturbation(f"perturbing weight {j} leaves the feasible region")
            cols.append(path_signature(world, wj, icfg).signed)
        jac[:, j] = (cols[0] - cols[1]) / (2.0 * cfg.fd_step)
    return jac


def optimize_weights(world: PointWorld, w0: WeightVector, target: DSignature,
                     cfg: OptimizerConfig = OptimizerConfig(),
                     icfg: IntegrationConfig = IntegrationConfig()) -> tuple[WeightVector, OptimizationTrace]:
    """Projected gradient descent on ``|D(w) - D*|``.

    Iterates are projected with margin ``eta + fd_step`` so the finite
    difference perturbations always stay inside the ``eta`` region.
    """
    if not is_feasible(w0, cfg.margin):
        raise InfeasibleInit("initial weights are not feasible with the configured margin")
    w = w0 if is_feasible(w0, cfg.margin + cfg.fd_step) else project_weights(w0, cfg, cfg.margin + cfg.fd_step)
    target_signed = target.signed
    trace = OptimizationTrace()
    m = world.n_obstacles
    for k in range(cfg.max_iters):
        sig = path_signature(world, w, icfg)
        resid = sig.signed - target_signed
        trace.iterates.append((w, sig, float(np.linalg.norm(resid))))
        if k > 0 and sig.signs != trace.iterates[-2][1].signs:
            trace.discontinuity_iters.append(k)
        if cfg.stop_on_match and sig.signs == target.signs:
            trace.terminated_by = "sign_match"
            return w, trace
        jac = dsig_jacobian(world, w, m, cfg, icfg)
        if np.linalg.norm(jac) < cfg.grad_threshold:
            trace.terminated_by = "threshold"
            return w, trace
        raw = WeightVector.from_array(w.as_array() - cfg.step_size * (resid @ jac))
        w = project_weights(raw, cfg, cfg.margin + cfg.fd_step)
    sig = path_signature(world, w, icfg)
    trace.iterates.append((w, sig, float(np.linalg.norm(sig.signed - target_signed))))
    if sig.signs != trace.iterates[-2][1].signs:
        trace.discontinuity_iters.append(len(trace.iterates) - 1)
    trace.terminated_by = "max_iters"
    return w, trace
