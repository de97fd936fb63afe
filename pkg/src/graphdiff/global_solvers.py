"""Full-graph baseline solvers: GS, SOR, GD, Chebyshev, and HK Taylor.

Each sweep touches every coordinate and is billed vol(V) = 2m operations.
Convergence is checked at sweep boundaries against the system's threshold
rule, so a zero source converges in zero sweeps.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from numba import njit

from .reports import SolveReport, SolverState
from .systems import DiffusionSystem

__all__ = ["GlobalConfig", "gauss_seidel", "sor", "gradient_descent",
           "chebyshev", "hk_taylor_global"]

DEFAULT_GLOBAL_SWEEPS = 10_000


@dataclass
class GlobalConfig:
    """Knobs for the global baselines; mu/L only matter for Chebyshev."""

    omega: float = 1.0
    mu: float | None = None
    L: float | None = None
    max_sweeps: int = DEFAULT_GLOBAL_SWEEPS

    def __post_init__(self):
        if not 0.0 < self.omega <= 2.0:
            raise ValueError("omega must be in (0, 2]")
        if self.mu is not None and self.L is not None and not 0.0 < self.mu <= self.L:
            raise ValueError("need 0 < mu <= L")


@njit(cache=True, nogil=True)
def _any_active(r, theta, signed):
    for i in range(r.shape[0]):
        ri = abs(r[i]) if signed else r[i]
        if ri >= theta[i]:
            return True
    return False


@njit(cache=True, nogil=True)
def _gs_sweep(offsets, targets, arc_w, x, r, omega):
    """One in-place relaxation pass in ascending node order."""
    for u in range(x.shape[0]):
        res = omega * r[u]
        if res == 0.0:
            continue
        x[u] += res
        r[u] -= res
        for j in range(offsets[u], offsets[u + 1]):
            r[targets[j]] += res * arc_w[j]


@njit(cache=True, nogil=True)
def _scatter_full(offsets, targets, arc_w, vals, out):
    """out += beta * P * vals over all coordinates."""
    for u in range(vals.shape[0]):
        val = vals[u]
        if val == 0.0:
            continue
        for j in range(offsets[u], offsets[u + 1]):
            out[targets[j]] += val * arc_w[j]


def _vol_v(sys: DiffusionSystem) -> int:
    return int(sys.graph.degrees.sum())


def _run_report(method, sys, converged, sweeps, ops, l1_trace, eps, wall, notes=None):
    return SolveReport(
        method=method, problem=sys.problem, converged=bool(converged),
        sweeps=int(sweeps), total_ops=int(ops), eps=float(eps),
        residual_l1_trace=[float(v) for v in l1_trace], wall_seconds=wall,
        notes=notes or {},
    )


def sor(sys: DiffusionSystem, cfg: GlobalConfig | None = None) -> tuple[SolverState, SolveReport]:
    """Standard GS-SOR: the local update rule applied to S_t = V in index order."""
    cfg = cfg or GlobalConfig()
    if sys.problem == "hk":
        raise ValueError("use hk_taylor_global for heat-kernel systems")
    g = sys.graph
    signed = cfg.omega > 1.0  # over-relaxation can drive residuals negative
    x = np.zeros(sys.dim)
    r = sys.b.copy()
    vol = _vol_v(sys)
    l1_trace = [float(np.abs(r).sum())]
    l2_trace = [float(np.linalg.norm(r))]
    sweeps = 0
    ops = 0
    t0 = time.perf_counter()
    converged = not _any_active(r, sys.theta, signed)
    while not converged and sweeps < cfg.max_sweeps:
        _gs_sweep(g.offsets, g.targets, sys.op.arc_weights, x, r, cfg.omega)
        sweeps += 1
        ops += vol
        l1_trace.append(float(np.abs(r).sum()))
        l2_trace.append(float(np.linalg.norm(r)))
        converged = not _any_active(r, sys.theta, signed)
    wall = time.perf_counter() - t0
    method = "gs" if cfg.omega == 1.0 else "sor"
    report = _run_report(method, sys, converged, sweeps, ops, l1_trace, sys.eps,
                         wall, notes={"omega": cfg.omega})
    report.notes["l2_trace"] = l2_trace
    return SolverState(x=x, r=r, sweeps=sweeps, ops=ops), report


def gauss_seidel(sys: DiffusionSystem, cfg: GlobalConfig | None = None) -> tuple[SolverState, SolveReport]:
    cfg = cfg or GlobalConfig()
    cfg.omega = 1.0
    return sor(sys, cfg)


def gradient_descent(sys: DiffusionSystem, cfg: GlobalConfig | None = None) -> tuple[SolverState, SolveReport]:
    """Unit-step gradient sweeps x += r, r <- (I - Q) r = beta P r."""
    cfg = cfg or GlobalConfig()
    if sys.problem == "hk":
        raise ValueError("use hk_taylor_global for heat-kernel systems")
    g = sys.graph
    x = np.zeros(sys.dim)
    r = sys.b.copy()
    vol = _vol_v(sys)
    l1_trace = [float(np.abs(r).sum())]
    l2_trace = [float(np.linalg.norm(r))]
    sweeps = 0
    ops = 0
    t0 = time.perf_counter()
    converged = not _any_active(r, sys.theta, False)
    while not converged and sweeps < cfg.max_sweeps:
        x += r
        nxt = np.zeros_like(r)
        _scatter_full(g.offsets, g.targets, sys.op.arc_weights, r, nxt)
        r = nxt
        sweeps += 1
        ops += vol
        l1_trace.append(float(np.abs(r).sum()))
        l2_trace.append(float(np.linalg.norm(r)))
        converged = not _any_active(r, sys.theta, False)
    wall = time.perf_counter() - t0
    report = _run_report("gd", sys, converged, sweeps, ops, l1_trace, sys.eps, wall)
    report.notes["l2_trace"] = l2_trace
    return SolverState(x=x, r=r, sweeps=sweeps, ops=ops), report


def chebyshev(sys: DiffusionSystem, cfg: GlobalConfig | None = None) -> tuple[SolverState, SolveReport]:
    """Two-term Chebyshev recurrence on the symmetric form of the system.

    Residuals can go negative, so the stop rule uses |r_u| < theta_u.
    """
    cfg = cfg or GlobalConfig()
    if sys.problem == "hk":
        raise ValueError("use hk_taylor_global for heat-kernel systems")
    from .local_solvers import _cheby_bounds

    mu, L = _cheby_bounds(sys, cfg.mu, cfg.L)
    if mu >= L:
        raise ValueError(f"need mu < L, got mu={mu}, L={L}")
    g = sys.graph
    x = np.zeros(sys.dim)
    r = sys.b.copy()
    vol = _vol_v(sys)
    l1_trace = [float(np.abs(r).sum())]
    l2_trace = [float(np.linalg.norm(r))]
    delta_trace = []
    sweeps = 0
    ops = 0
    delta = (L - mu) / (L + mu)
    prev_inc = None
    t0 = time.perf_counter()
    converged = not _any_active(r, sys.theta, True)
    while not converged and sweeps < cfg.max_sweeps:
        if prev_inc is None:
            inc = (2.0 / (L + mu)) * r
        else:
            delta_next = 1.0 / (2.0 * (L + mu) / (L - mu) - delta)
            inc = (4.0 * delta_next / (L - mu)) * r + (delta * delta_next) * prev_inc
            delta = delta_next
        x += inc
        scat = np.zeros_like(r)
        _scatter_full(g.offsets, g.targets, sys.op.arc_weights, inc, scat)
        r += scat - inc
        prev_inc = inc
        sweeps += 1
        ops += vol
        l1_trace.append(float(np.abs(r).sum()))
        l2_trace.append(float(np.linalg.norm(r)))
        delta_trace.append(delta)
        converged = not _any_active(r, sys.theta, True)
    wall = time.perf_counter() - t0
    report = _run_report("ch", sys, converged, sweeps, ops, l1_trace, sys.eps,
                         wall, notes={"mu": mu, "L": L})
    report.notes["l2_trace"] = l2_trace
    report.notes["delta_trace"] = delta_trace
    return SolverState(x=x, r=r, sweeps=sweeps, ops=ops), report


def hk_taylor_global(sys: DiffusionSystem, cfg: GlobalConfig | None = None) -> tuple[SolverState, SolveReport]:
    """Dense stage propagation of the truncated heat-kernel Taylor sum.

    Runs exactly the N stages chosen at construction; each stage is one
    vol(V) pass.
    """
    cfg = cfg or GlobalConfig()
    if sys.problem != "hk":
        raise ValueError("hk_taylor_global requires a heat-kernel system")
    g = sys.graph
    n_stages = sys.op.stage_count
    v = np.zeros((n_stages + 1, g.n))
    v[0] = sys.b[:g.n]
    vol = _vol_v(sys)
    ops = 0
    t0 = time.perf_counter()
    vk = v[0].copy()
    for k in range(n_stages):
        nxt = np.zeros_like(vk)
        _scatter_full(g.offsets, g.targets, sys.op.arc_weights, vk, nxt)
        vk = sys.op.stage_weights[k] * nxt
        v[k + 1] = vk
        ops += vol
    wall = time.perf_counter() - t0
    x = v.reshape(-1)
    report = _run_report("hk-taylor", sys, True, n_stages, ops, [], sys.eps, wall,
                         notes={"stage_count": n_stages, "tau": sys.tau})
    state = SolverState(x=x, r=sys.residual(x), sweeps=n_stages, ops=ops)
    return state, report
