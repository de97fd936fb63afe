"""Frontier-restricted solvers: LocalGS, LocalSOR, LocalGD, LocalCH, AHK.

Every solver maintains the estimate/residual pair and an evolving active set
S_t = {u : r_u >= theta_u}. Sweeps are delimited in a FIFO queue by a
sentinel; nodes activated during sweep t join S_{t+1}. The billed cost of a
sweep is vol(S_t), the degree sum of the nodes actually pushed, and the logs
(per-sweep volume, active-mass fraction gamma_t, residual l1 norm) feed the
runtime-bound checks in the metrics layer.
"""

from __future__ import annotations

import math
import time

import numpy as np
from numba import njit, prange

from .reports import LocalReport, SolverState
from .systems import DiffusionSystem

__all__ = [
    "local_gs",
    "local_sor",
    "local_gd",
    "local_ch",
    "local_hk",
    "optimal_omega",
    "push_sweeps",
]

DEFAULT_MAX_SWEEPS = 1_000_000
_GD_CHUNKS = 8


def optimal_omega(alpha: float) -> float:
    """Accelerated relaxation 2 / (1 + sqrt(1 - (alpha - 1)^2)); always in (1, 2)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    return 2.0 / (1.0 + math.sqrt(1.0 - (alpha - 1.0) ** 2))


# ---------------------------------------------------------------------------
# sequential push kernel (LocalGS / LocalSOR / dynamic repair / feature push)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _push_kernel(offsets, targets, arc_w, theta, x, r, seeds,
                 omega, x_gain, signed, max_sweeps):
    n = theta.shape[0]
    sent = n
    qcap = n + 2
    queue = np.empty(qcap, np.int64)
    qmark = np.zeros(n, np.bool_)
    front = 0
    rear = 0

    for i in range(seeds.shape[0]):
        u = seeds[i]
        ru = r[u]
        if signed:
            act = abs(ru) >= theta[u]
        else:
            act = ru >= theta[u]
        if act and not qmark[u]:
            queue[rear] = u
            rear = (rear + 1) % qcap
            qmark[u] = True

    cap = 256
    vol_log = np.empty(cap, np.int64)
    gamma_log = np.empty(cap, np.float64)
    l1_log = np.empty(cap + 1, np.float64)
    sign_log = np.empty(cap, np.int8)  # 0 none, +1/-1 pure, 2 mixed

    l1 = 0.0
    min_r = np.inf
    for i in range(n):
        l1 += abs(r[i])
        if r[i] < min_r:
            min_r = r[i]
    l1_log[0] = l1

    sweeps = 0
    total_ops = 0
    converged = True
    if front == rear:
        return (converged, sweeps, total_ops, vol_log[:0], gamma_log[:0],
                l1_log[:1], min_r, sign_log[:0])

    queue[rear] = sent
    rear = (rear + 1) % qcap
    svol = 0
    sgamma = 0.0
    saw_pos = False
    saw_neg = False

    while front != rear:
        u = queue[front]
        front = (front + 1) % qcap
        if u == sent:
            if sweeps >= cap:
                new_cap = 2 * cap
                nv = np.empty(new_cap, np.int64)
                ng = np.empty(new_cap, np.float64)
                nl = np.empty(new_cap + 1, np.float64)
                ns = np.empty(new_cap, np.int8)
                nv[:cap] = vol_log
                ng[:cap] = gamma_log
                nl[:cap + 1] = l1_log
                ns[:cap] = sign_log
                vol_log, gamma_log, l1_log, sign_log = nv, ng, nl, ns
                cap = new_cap
            vol_log[sweeps] = svol
            gamma_log[sweeps] = sgamma / l1 if l1 > 0.0 else 0.0
            if saw_pos and saw_neg:
                sign_log[sweeps] = 2
            elif saw_pos:
                sign_log[sweeps] = 1
            elif saw_neg:
                sign_log[sweeps] = -1
            else:
                sign_log[sweeps] = 0
            total_ops += svol
            sweeps += 1
            l1 = 0.0
            for i in range(n):
                l1 += abs(r[i])
                if r[i] < min_r:
                    min_r = r[i]
            l1_log[sweeps] = l1
            if front == rear:
                break
            if sweeps >= max_sweeps:
                converged = False
                break
            queue[rear] = sent
            rear = (rear + 1) % qcap
            svol = 0
            sgamma = 0.0
            saw_pos = False
            saw_neg = False
            continue
        qmark[u] = False
        ru = r[u]
        if signed:
            if abs(ru) < theta[u]:
                continue
        else:
            if ru < theta[u]:
                continue
        deg = offsets[u + 1] - offsets[u]
        svol += deg
        sgamma += abs(ru)
        if ru > 0.0:
            saw_pos = True
        elif ru < 0.0:
            saw_neg = True
        res = omega * ru
        x[u] += x_gain * res
        r[u] = ru - res
        for j in range(offsets[u], offsets[u + 1]):
            v = targets[j]
            rv = r[v] + res * arc_w[j]
            r[v] = rv
            if not qmark[v]:
                if signed:
                    act = abs(rv) >= theta[v]
                else:
                    act = rv >= theta[v]
                if act:
                    queue[rear] = v
                    rear = (rear + 1) % qcap
                    qmark[v] = True
        if not qmark[u]:
            ru2 = r[u]
            if signed:
                act = abs(ru2) >= theta[u]
            else:
                act = ru2 >= theta[u]
            if act:
                queue[rear] = u
                rear = (rear + 1) % qcap
                qmark[u] = True

    return (converged, sweeps, total_ops, vol_log[:sweeps], gamma_log[:sweeps],
            l1_log[:sweeps + 1], min_r, sign_log[:sweeps])


def push_sweeps(sys_or_arrays, x, r, seeds, omega=1.0, x_gain=1.0, signed=False,
                max_sweeps=DEFAULT_MAX_SWEEPS):
    """Run the FIFO push loop in place; shared by the solver front ends."""
    if isinstance(sys_or_arrays, DiffusionSystem):
        g = sys_or_arrays.graph
        arrays = (g.offsets, g.targets, sys_or_arrays.op.arc_weights, sys_or_arrays.theta)
    else:
        arrays = sys_or_arrays
    offsets, targets, arc_w, theta = arrays
    return _push_kernel(offsets, targets, arc_w, theta, x, r,
                        np.asarray(seeds, dtype=np.int64), float(omega),
                        float(x_gain), bool(signed), int(max_sweeps))


def _local_report(method, sys, converged, sweeps, total_ops, vol_log, gamma_log,
                  l1_log, min_r, r, eps, wall, guarantees_disabled=False, notes=None):
    return LocalReport(
        method=method, problem=sys.problem, converged=bool(converged),
        sweeps=int(sweeps), total_ops=int(total_ops), eps=float(eps),
        residual_l1_trace=[float(v) for v in l1_log],
        wall_seconds=wall,
        gamma_log=[float(v) for v in gamma_log],
        vol_log=[int(v) for v in vol_log],
        min_residual=float(min_r),
        support_size=int(np.count_nonzero(r)),
        guarantees_disabled=guarantees_disabled,
        notes=notes or {},
    )


def local_sor(sys: DiffusionSystem, omega: float, eps: float | None = None,
              max_sweeps: int = DEFAULT_MAX_SWEEPS) -> tuple[SolverState, LocalReport]:
    """Epoch-based sequential relaxed push.

    omega in (0, 1] keeps residuals nonnegative with nonincreasing l1 norm;
    omega in (1, 2] is the accelerated heuristic mode where residuals may go
    negative, activation switches to |r_u| >= theta_u, and the report flags
    the guarantees as disabled.
    """
    if not 0.0 < omega <= 2.0:
        raise ValueError("omega must be in (0, 2]")
    if sys.problem == "hk":
        raise ValueError("use local_hk for heat-kernel systems")
    if np.any(sys.b < 0):
        raise ValueError("local push requires a nonnegative source")
    eps = sys.eps if eps is None else eps
    # omega <= 1 with b >= 0 keeps residuals nonnegative exactly
    signed = omega > 1.0
    x = np.zeros(sys.dim)
    r = sys.b.copy()
    seeds = np.flatnonzero(sys.b)
    t0 = time.perf_counter()
    out = push_sweeps(sys, x, r, seeds, omega=omega, signed=signed,
                      max_sweeps=max_sweeps)
    wall = time.perf_counter() - t0
    converged, sweeps, total_ops, vol_log, gamma_log, l1_log, min_r, sign_log = out
    report = _local_report(
        "local-sor" if omega != 1.0 else "local-gs", sys, converged, sweeps,
        total_ops, vol_log, gamma_log, l1_log, min_r, r, eps, wall,
        guarantees_disabled=signed,
        notes={"omega": omega, "sweep_signs": [int(v) for v in sign_log]},
    )
    return SolverState(x=x, r=r, sweeps=report.sweeps, ops=report.total_ops), report


def local_gs(sys: DiffusionSystem, eps: float | None = None,
             max_sweeps: int = DEFAULT_MAX_SWEEPS) -> tuple[SolverState, LocalReport]:
    """LocalSOR with omega = 1: the classic residual push."""
    return local_sor(sys, omega=1.0, eps=eps, max_sweeps=max_sweeps)


# ---------------------------------------------------------------------------
# sweep-synchronous kernels (LocalGD / LocalCH)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _apply_update_seq(offsets, targets, arc_w, r, frontier, vals, cmark, cand):
    """r -= Q restricted update: r[frontier] -= vals, then scatter beta*P*vals.

    Returns the candidate count; cand holds frontier members first, then
    newly touched nodes in scatter order.
    """
    ccount = 0
    for i in range(frontier.shape[0]):
        u = frontier[i]
        r[u] -= vals[i]
        if not cmark[u]:
            cmark[u] = True
            cand[ccount] = u
            ccount += 1
    for i in range(frontier.shape[0]):
        u = frontier[i]
        val = vals[i]
        for j in range(offsets[u], offsets[u + 1]):
            v = targets[j]
            r[v] += val * arc_w[j]
            if not cmark[v]:
                cmark[v] = True
                cand[ccount] = v
                ccount += 1
    return ccount


@njit(cache=True, parallel=True)
def _scatter_chunks(offsets, targets, arc_w, frontier, vals, bufs, touch, tcount):
    nch = bufs.shape[0]
    csize = (frontier.shape[0] + nch - 1) // nch
    for c in prange(nch):
        lo = c * csize
        hi = min(frontier.shape[0], lo + csize)
        cnt = 0
        for i in range(lo, hi):
            u = frontier[i]
            val = vals[i]
            for j in range(offsets[u], offsets[u + 1]):
                v = targets[j]
                bufs[c, v] += val * arc_w[j]
                touch[c, cnt] = v
                cnt += 1
        tcount[c] = cnt


@njit(cache=True, nogil=True)
def _combine_chunks(r, frontier, vals, bufs, touch, tcount, cmark, cand):
    ccount = 0
    for i in range(frontier.shape[0]):
        u = frontier[i]
        r[u] -= vals[i]
        if not cmark[u]:
            cmark[u] = True
            cand[ccount] = u
            ccount += 1
    for c in range(bufs.shape[0]):
        for t in range(tcount[c]):
            v = touch[c, t]
            r[v] += bufs[c, v]
            bufs[c, v] = 0.0  # repeated touches add zero afterwards
            if not cmark[v]:
                cmark[v] = True
                cand[ccount] = v
                ccount += 1
    return ccount


@njit(cache=True, nogil=True)
def _filter_frontier(r, theta, cand, ccount, cmark, out, signed):
    fcount = 0
    for i in range(ccount):
        u = cand[i]
        cmark[u] = False
        ru = r[u]
        if signed:
            act = abs(ru) >= theta[u]
        else:
            act = ru >= theta[u]
        if act:
            out[fcount] = u
            fcount += 1
    return fcount


@njit(cache=True, nogil=True)
def _l1_and_min(r):
    l1 = 0.0
    mn = np.inf
    for i in range(r.shape[0]):
        l1 += abs(r[i])
        if r[i] < mn:
            mn = r[i]
    return l1, mn


class _SweepDriver:
    """Shared state for the sweep-synchronous solvers."""

    def __init__(self, sys: DiffusionSystem, signed: bool, parallel: bool):
        g = sys.graph
        self.sys = sys
        self.signed = signed
        self.parallel = parallel
        self.offsets, self.targets = g.offsets, g.targets
        self.arc_w = sys.op.arc_weights
        self.theta = sys.theta
        dim = sys.dim
        self.r = sys.b.copy()
        self.x = np.zeros(dim)
        self.cmark = np.zeros(dim, np.bool_)
        self.cand = np.empty(dim, np.int64)
        self.fbuf = np.empty(dim, np.int64)
        if parallel:
            self.bufs = np.zeros((_GD_CHUNKS, dim))
        seeds = np.flatnonzero(sys.b)
        fcount = _filter_frontier(self.r, self.theta, seeds, seeds.shape[0],
                                  self.cmark, self.fbuf, signed)
        self.frontier = self.fbuf[:fcount].copy()
        self.vol_log: list[int] = []
        self.gamma_log: list[float] = []
        l1, mn = _l1_and_min(self.r)
        self.l1_log = [l1]
        self.min_r = mn

    def apply(self, vals: np.ndarray) -> None:
        """Apply the restricted update with vals on the current frontier."""
        if self.parallel and self.frontier.shape[0] >= _GD_CHUNKS:
            csize = (self.frontier.shape[0] + _GD_CHUNKS - 1) // _GD_CHUNKS
            maxvol = 0
            for c in range(_GD_CHUNKS):
                lo, hi = c * csize, min(self.frontier.shape[0], (c + 1) * csize)
                vol = int(np.sum(self.offsets[self.frontier[lo:hi] + 1]
                                 - self.offsets[self.frontier[lo:hi]]))
                maxvol = max(maxvol, vol)
            touch = np.empty((_GD_CHUNKS, max(1, maxvol)), np.int64)
            tcount = np.zeros(_GD_CHUNKS, np.int64)
            _scatter_chunks(self.offsets, self.targets, self.arc_w,
                            self.frontier, vals, self.bufs, touch, tcount)
            ccount = _combine_chunks(self.r, self.frontier, vals, self.bufs,
                                     touch, tcount, self.cmark, self.cand)
        else:
            ccount = _apply_update_seq(self.offsets, self.targets, self.arc_w,
                                       self.r, self.frontier, vals,
                                       self.cmark, self.cand)
        fcount = _filter_frontier(self.r, self.theta, self.cand, ccount,
                                  self.cmark, self.fbuf, self.signed)
        self.frontier = self.fbuf[:fcount].copy()

    def log_sweep(self, svol: int, sgamma: float) -> None:
        self.vol_log.append(svol)
        self.gamma_log.append(sgamma / self.l1_log[-1] if self.l1_log[-1] > 0 else 0.0)
        l1, mn = _l1_and_min(self.r)
        self.l1_log.append(l1)
        self.min_r = min(self.min_r, mn)

    def frontier_volume(self) -> int:
        return int(np.sum(self.offsets[self.frontier + 1] - self.offsets[self.frontier]))


def local_gd(sys: DiffusionSystem, eps: float | None = None,
             max_sweeps: int = DEFAULT_MAX_SWEEPS,
             parallel: bool = False) -> tuple[SolverState, LocalReport]:
    """Jacobi-style restricted gradient step x += r_{S_t}, r -= Q r_{S_t}.

    All members of S_t update simultaneously. The parallel flag scatters via
    fixed chunk buffers combined in order, so parallel and sequential runs
    produce identical frontier sequences and agree to float rounding.
    """
    if sys.problem == "hk":
        raise ValueError("use local_hk for heat-kernel systems")
    if np.any(sys.b < 0):
        raise ValueError("local_gd requires a nonnegative source")
    eps = sys.eps if eps is None else eps
    drv = _SweepDriver(sys, signed=False, parallel=parallel)
    t0 = time.perf_counter()
    sweeps = 0
    converged = True
    total_ops = 0
    frontier_trace: list[np.ndarray] = []
    while drv.frontier.shape[0]:
        if sweeps >= max_sweeps:
            converged = False
            break
        frontier_trace.append(drv.frontier.copy())
        svol = drv.frontier_volume()
        vals = drv.r[drv.frontier].copy()
        sgamma = float(np.abs(vals).sum())
        drv.x[drv.frontier] += vals
        drv.apply(vals)
        drv.log_sweep(svol, sgamma)
        total_ops += svol
        sweeps += 1
    wall = time.perf_counter() - t0
    report = _local_report(
        "local-gd", sys, converged, sweeps, total_ops, drv.vol_log,
        drv.gamma_log, drv.l1_log, drv.min_r, drv.r, eps, wall,
        notes={"parallel": parallel},
    )
    report.notes["frontier_sizes"] = [int(f.shape[0]) for f in frontier_trace]
    state = SolverState(x=drv.x, r=drv.r, sweeps=sweeps, ops=total_ops,
                        frontier_trace=frontier_trace)
    return state, report


def local_ch(sys: DiffusionSystem, mu: float | None = None, L: float | None = None,
             eps: float | None = None,
             max_sweeps: int | None = None) -> tuple[SolverState, LocalReport]:
    """Momentum-carrying restricted Chebyshev updates.

    Residuals may go negative, so the frontier rule is |r_u| >= theta_u and
    convergence is not guaranteed; runs abort with a diagnostic report when
    the residual mass exceeds 10x the source mass.
    """
    if sys.problem == "hk":
        raise ValueError("use local_hk for heat-kernel systems")
    mu, L = _cheby_bounds(sys, mu, L)
    if mu >= L:
        raise ValueError(f"need mu < L, got mu={mu}, L={L}")
    eps = sys.eps if eps is None else eps
    if max_sweeps is None:
        gap = max(mu, 1e-12)
        max_sweeps = max(1000, int(10 * math.log(max(1.0 / max(eps, 1e-300), 2.0)) / gap))
    drv = _SweepDriver(sys, signed=True, parallel=False)
    rho = (L - mu) / (L + mu)
    step0 = 2.0 / (L + mu)
    mom = np.zeros(sys.dim)
    mom_stamp = np.full(sys.dim, -2, np.int64)
    b_l1 = float(np.abs(sys.b).sum())
    t0 = time.perf_counter()
    sweeps = 0
    converged = True
    aborted = False
    total_ops = 0
    delta = rho
    while drv.frontier.shape[0]:
        if sweeps >= max_sweeps:
            converged = False
            break
        fr = drv.frontier
        svol = drv.frontier_volume()
        rvals = drv.r[fr]
        sgamma = float(np.abs(rvals).sum())
        if sweeps == 0:
            vals = step0 * rvals
        else:
            delta_next = 1.0 / (2.0 * (L + mu) / (L - mu) - delta)
            coef_r = 4.0 * delta_next / (L - mu)
            coef_m = delta * delta_next
            prev = np.where(mom_stamp[fr] == sweeps - 1, mom[fr], 0.0)
            vals = coef_r * rvals + coef_m * prev
            delta = delta_next
        drv.x[fr] += vals
        mom[fr] = vals
        mom_stamp[fr] = sweeps
        drv.apply(vals)
        drv.log_sweep(svol, sgamma)
        total_ops += svol
        sweeps += 1
        if drv.l1_log[-1] > 10.0 * b_l1:
            converged = False
            aborted = True
            break
    wall = time.perf_counter() - t0
    report = _local_report(
        "local-ch", sys, converged, sweeps, total_ops, drv.vol_log,
        drv.gamma_log, drv.l1_log, drv.min_r, drv.r, eps, wall,
        guarantees_disabled=True,
        notes={"mu": mu, "L": L, "diverged": aborted},
    )
    return SolverState(x=drv.x, r=drv.r, sweeps=sweeps, ops=total_ops), report


def _cheby_bounds(sys: DiffusionSystem, mu, L):
    """Default eigenvalue bounds: [alpha, 2-alpha] for symmetrized PPR,
    1 -/+ alpha*lam for Katz (lam from the power-iteration estimate, d_max as
    the conservative fallback)."""
    if mu is not None and L is not None:
        return float(mu), float(L)
    if sys.problem == "ppr" or sys.problem == "gen":
        return sys.alpha, 2.0 - sys.alpha
    if sys.problem == "katz":
        from .graph import spectral_norm_estimate

        try:
            lam = spectral_norm_estimate(sys.graph, iters=200, seed=0)
        except Exception:
            lam = float(sys.graph.d_max)
        lam = min(max(lam, 1e-12), float(sys.graph.d_max))
        return 1.0 - sys.alpha * lam, 1.0 + sys.alpha * lam
    raise ValueError(f"no default Chebyshev bounds for {sys.problem}")


# ---------------------------------------------------------------------------
# heat-kernel push on the stage-expanded system
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _hk_push_kernel(offsets, targets, base_w, stage_w, theta, v, r, seed,
                    n, n_stages, max_sweeps):
    dim = (n_stages + 1) * n
    sent = dim
    qcap = dim + 2
    queue = np.empty(qcap, np.int64)
    qmark = np.zeros(dim, np.bool_)
    front = 0
    rear = 0
    if r[seed] >= theta[seed]:
        queue[rear] = seed
        rear += 1
        qmark[seed] = True

    cap = 256
    vol_log = np.empty(cap, np.int64)
    gamma_log = np.empty(cap, np.float64)
    l1_log = np.empty(cap + 1, np.float64)
    l1 = 0.0
    min_r = np.inf
    for i in range(dim):
        l1 += abs(r[i])
        if r[i] < min_r:
            min_r = r[i]
    l1_log[0] = l1

    sweeps = 0
    total_ops = 0
    converged = True
    if front == rear:
        return converged, sweeps, total_ops, vol_log[:0], gamma_log[:0], l1_log[:1], min_r
    queue[rear] = sent
    rear = (rear + 1) % qcap
    svol = 0
    sgamma = 0.0

    while front != rear:
        idx = queue[front]
        front = (front + 1) % qcap
        if idx == sent:
            if sweeps >= cap:
                new_cap = 2 * cap
                nv = np.empty(new_cap, np.int64)
                ng = np.empty(new_cap, np.float64)
                nl = np.empty(new_cap + 1, np.float64)
                nv[:cap] = vol_log
                ng[:cap] = gamma_log
                nl[:cap + 1] = l1_log
                vol_log, gamma_log, l1_log = nv, ng, nl
                cap = new_cap
            vol_log[sweeps] = svol
            gamma_log[sweeps] = sgamma / l1 if l1 > 0.0 else 0.0
            total_ops += svol
            sweeps += 1
            l1 = 0.0
            for i in range(dim):
                l1 += abs(r[i])
                if r[i] < min_r:
                    min_r = r[i]
            l1_log[sweeps] = l1
            if front == rear:
                break
            if sweeps >= max_sweeps:
                converged = False
                break
            queue[rear] = sent
            rear = (rear + 1) % qcap
            svol = 0
            sgamma = 0.0
            continue
        qmark[idx] = False
        ri = r[idx]
        if ri < theta[idx]:
            continue
        k = idx // n
        u = idx - k * n
        deg = offsets[u + 1] - offsets[u]
        svol += deg
        sgamma += abs(ri)
        v[idx] += ri
        r[idx] = 0.0
        if k < n_stages:
            w = stage_w[k]
            base = k * n + n
            for j in range(offsets[u], offsets[u + 1]):
                t = base + targets[j]
                rt = r[t] + ri * w * base_w[j]
                r[t] = rt
                if not qmark[t] and rt >= theta[t]:
                    queue[rear] = t
                    rear = (rear + 1) % qcap
                    qmark[t] = True

    return (converged, sweeps, total_ops, vol_log[:sweeps], gamma_log[:sweeps],
            l1_log[:sweeps + 1], min_r)


def local_hk(g, tau: float, s: int, eps: float,
             max_sweeps: int = DEFAULT_MAX_SWEEPS) -> tuple[np.ndarray, LocalReport]:
    """Residual push on the stage-expanded heat-kernel system.

    A push at stage-k coordinate of node u zeroes its residual, adds it to
    the stage estimate, and scatters tau/((k+1) d_u) per neighbor into stage
    k+1; the last stage is absorbing. Thresholds are the volume-normalized
    per-stage rule of the system builder, which pins the l1 error of the
    returned estimate to eps plus the Taylor tail.
    """
    from .systems import make_hk_system

    sys = make_hk_system(g, tau, s, eps)
    n_stages = sys.op.stage_count
    base_w = sys.op.arc_weights  # bare 1/d_u column weights (beta = 1)
    v = np.zeros(sys.dim)
    r = sys.b.copy()
    t0 = time.perf_counter()
    out = _hk_push_kernel(g.offsets, g.targets, base_w,
                          sys.op.stage_weights.astype(np.float64)
                          if n_stages else np.empty(0),
                          sys.theta, v, r, int(s), g.n, n_stages,
                          int(max_sweeps))
    wall = time.perf_counter() - t0
    converged, sweeps, total_ops, vol_log, gamma_log, l1_log, min_r = out
    report = _local_report(
        "local-hk", sys, converged, sweeps, total_ops, vol_log, gamma_log,
        l1_log, min_r, r, eps, wall,
        notes={"tau": tau, "stage_count": n_stages},
    )
    f_hat = sys.back_transform(v)
    report.notes["residual_mass"] = float(np.abs(r).sum())
    return f_hat, report
