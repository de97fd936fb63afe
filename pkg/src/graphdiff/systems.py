"""Linear systems Q x = b behind the diffusion problems.

Each problem (personalized PageRank, Katz centrality, heat kernel) is bundled
as an operator Q = I - beta * P over a CSR graph, a sparse right-hand side, a
per-node activation threshold, and a back-transform from the solver estimate
to the diffusion vector. Dense and truncated-series solvers act as
verification oracles for the iterative paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .graph import CsrGraph

__all__ = [
    "OperatorQ",
    "DiffusionSystem",
    "SystemError",
    "make_ppr_system",
    "make_katz_system",
    "make_hk_system",
    "make_generalized_system",
    "dense_solve",
    "series_oracle",
    "hk_stage_count",
    "hk_tail_bound",
    "hk_paper_bound",
]

_DENSE_GUARD = 2000


class SystemError(ValueError):
    """Invalid system construction or oracle precondition."""


@dataclass(frozen=True)
class OperatorQ:
    """Q = I - beta * P with P encoded as per-arc scatter weights.

    arc_weights[j] holds beta * P[target_j, source_j] in CSR arc order, so a
    push of mass r_u at node u sends r_u * arc_weights[j] along each arc j of
    u. pkind is one of "rw" (A D^-1), "adj" (A), "sym" (D^-1/2 A D^-1/2) or
    "gen" (D^-b A D^(b-1)); for the heat kernel the operator also carries the
    stage count and the stage couplings of the expanded system.
    """

    graph: CsrGraph
    beta: float
    pkind: str
    arc_weights: np.ndarray
    p_max: float
    contraction_ok: bool  # beta * p_max < 1, the monotone-push regime
    stage_count: int = 0  # HK only: N (stages run 0..N)
    stage_weights: np.ndarray = field(default=None)  # HK only: tau/(k+1), k < N

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Q x = x - beta * (P x), entrywise."""
        return x - self.propagate(x)

    def propagate(self, x: np.ndarray) -> np.ndarray:
        """beta * (P x) via arc scatter."""
        g = self.graph
        src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
        out = np.zeros(g.n)
        np.add.at(out, g.targets, self.arc_weights * x[src])
        return out

    def dense_matrix(self) -> np.ndarray:
        g = self.graph
        if g.n > _DENSE_GUARD:
            raise SystemError(f"dense matrix guard: n={g.n} > {_DENSE_GUARD}")
        q = np.eye(g.n)
        src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
        np.subtract.at(q, (g.targets, src), self.arc_weights)
        return q


def _gen_arc_weights(g: CsrGraph, beta: float, b_exp: float) -> tuple[np.ndarray, float]:
    """Arc weights beta / (d_u^(1-b) d_v^b) and the max column mass of P."""
    d = g.degrees.astype(np.float64)
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    du = np.where(d > 0, d, 1.0)  # degree-0 nodes own no arcs; placeholder only
    w = 1.0 / (du[src] ** (1.0 - b_exp) * du[g.targets] ** b_exp)
    col_mass = np.zeros(g.n)
    np.add.at(col_mass, src, w)
    p_max = float(col_mass.max()) if g.n else 0.0
    return beta * w, p_max


def _make_operator(g: CsrGraph, beta: float, pkind: str, b_exp: float = 0.0) -> OperatorQ:
    if pkind == "adj":
        w = np.full(g.targets.shape[0], beta)
        p_max = float(g.d_max)
    else:
        b_map = {"rw": 0.0, "sym": 0.5, "gen": b_exp}
        w, p_max = _gen_arc_weights(g, 1.0, b_map[pkind])
        w *= beta
    return OperatorQ(
        graph=g, beta=beta, pkind=pkind, arc_weights=w,
        p_max=p_max, contraction_ok=bool(beta * p_max < 1.0),
    )


@dataclass(frozen=True)
class DiffusionSystem:
    """A concrete Q x = b instance with thresholds and back-transform."""

    op: OperatorQ
    b: np.ndarray
    theta: np.ndarray  # activation threshold per coordinate; +inf at degree 0
    problem: str  # "ppr" | "katz" | "hk" | "gen"
    alpha: float = 0.0
    tau: float = 0.0
    eps: float = 0.0
    beta_exp: float = 0.0
    symmetrized: bool = False
    regime: str = "nonneg"  # Katz: "nonneg" when alpha*d_max < 1, else "spectral"
    source: int = -1  # seed node id; -1 for dense-source systems

    @property
    def graph(self) -> CsrGraph:
        return self.op.graph

    @property
    def dim(self) -> int:
        """Coordinate count (stage-expanded for HK)."""
        return self.b.shape[0]

    def residual(self, x: np.ndarray) -> np.ndarray:
        """b - Q x, recomputed from scratch (debug / exit verification)."""
        if self.problem == "hk":
            return self.b - _hk_apply(self, x)
        return self.b - self.op.apply(x)

    def back_transform(self, x: np.ndarray) -> np.ndarray:
        """Map a solver estimate to the diffusion vector f-hat."""
        if self.problem == "ppr" or self.problem == "gen":
            return x.copy()
        if self.problem == "katz":
            f = x.copy()
            f -= self.b  # b = e_s
            return f
        if self.problem == "hk":
            n = self.graph.n
            stages = x.reshape(self.op.stage_count + 1, n)
            return math.exp(-self.tau) * stages.sum(axis=0)
        raise SystemError(f"unknown problem {self.problem}")


def _theta_vec(g: CsrGraph, coeff: float, power: float = 1.0) -> np.ndarray:
    d = g.degrees.astype(np.float64)
    theta = np.where(d > 0, coeff * np.power(np.maximum(d, 1.0), power), np.inf)
    return theta


def make_ppr_system(g: CsrGraph, alpha: float, s: int, eps: float,
                    symmetrized: bool = False) -> DiffusionSystem:
    """PPR system (I - (1-alpha) A D^-1) x = alpha e_s with theta_u = eps*alpha*d_u.

    The symmetrized flag marks the system for solvers that need a symmetric
    positive definite operator; bookkeeping stays in original coordinates
    (residuals are the D^1/2-scaled ones), so the arrays and the frontier
    rule are identical to the unsymmetrized form. alpha = 1 is the identity
    limit Q = I.
    """
    if not 0.0 < alpha <= 1.0:
        raise SystemError("alpha must be in (0, 1]")
    if not 0 <= s < g.n:
        raise SystemError("source out of range")
    if g.degrees[s] < 1:
        raise SystemError("source must have at least one neighbor")
    if not 0.0 < eps <= 1.0 / g.degrees[s]:
        warnings.warn(
            f"eps={eps} outside (0, 1/d_s]; runtime guarantees may not apply",
            stacklevel=2,
        )
    op = _make_operator(g, 1.0 - alpha, "rw")
    assert op.contraction_ok, "PPR operator must satisfy beta * P_max < 1"
    b = np.zeros(g.n)
    b[s] = alpha
    return DiffusionSystem(
        op=op, b=b, theta=_theta_vec(g, eps * alpha), problem="ppr",
        alpha=alpha, eps=eps, symmetrized=symmetrized, source=s,
    )


def make_katz_system(g: CsrGraph, alpha: float, s: int, eps: float,
                     lam_hat: float | None = None) -> DiffusionSystem:
    """Katz system (I - alpha A) x = e_s with theta_u = eps*d_u.

    alpha must lie below 1/lam_hat (series divergence otherwise). The
    nonnegativity and runtime guarantees additionally need alpha < 1/d_max;
    the regime field records which case applies.
    """
    if not 0 <= s < g.n:
        raise SystemError("source out of range")
    if g.degrees[s] < 1:
        raise SystemError("source must have at least one neighbor")
    if lam_hat is None:
        from .graph import spectral_norm_estimate

        lam_hat = spectral_norm_estimate(g, iters=200, seed=0)
    if alpha <= 0.0 or (lam_hat > 0 and alpha >= 1.0 / lam_hat):
        raise SystemError(f"alpha={alpha} not in (0, 1/lam_hat={1.0 / lam_hat if lam_hat else 'inf'})")
    op = _make_operator(g, alpha, "adj")
    regime = "nonneg" if alpha * g.d_max < 1.0 else "spectral"
    b = np.zeros(g.n)
    b[s] = 1.0
    return DiffusionSystem(
        op=op, b=b, theta=_theta_vec(g, eps), problem="katz",
        alpha=alpha, eps=eps, regime=regime, source=s,
    )


def default_katz_alpha(g: CsrGraph, lam_hat: float | None = None) -> float:
    """alpha = 1 / (lam_hat + 1), the standard experimental setting."""
    if lam_hat is None:
        from .graph import spectral_norm_estimate

        lam_hat = spectral_norm_estimate(g, iters=200, seed=0)
    return 1.0 / (lam_hat + 1.0)


def hk_tail_bound(tau: float, n_stages: int) -> float:
    """Exact truncated Taylor tail e^-tau * sum_{k>N} tau^k / k!."""
    total = 0.0
    term = 1.0
    partial = 1.0
    for k in range(1, n_stages + 1):
        term *= tau / k
        partial += term
    # remaining tail summed forward until it stops changing
    k = n_stages
    while True:
        k += 1
        term *= tau / k
        new_total = total + term
        if new_total == total:
            break
        total = new_total
        if k > n_stages + 500:
            break
    return math.exp(-tau) * total


def hk_paper_bound(n_stages: int) -> float:
    """The cited truncation quality 1 / (N! N)."""
    if n_stages < 1:
        return math.inf
    return 1.0 / (math.factorial(n_stages) * n_stages)


def hk_stage_count(tau: float, eps: float) -> int:
    """Smallest N with truncated-tail bound <= eps/2, capped at 2*tau + 40."""
    cap = int(2 * tau + 40)
    for n_stages in range(0, cap + 1):
        if hk_tail_bound(tau, n_stages) <= eps / 2.0:
            return n_stages
    return cap


def make_hk_system(g: CsrGraph, tau: float, s: int, eps: float) -> DiffusionSystem:
    """Heat-kernel stage-expanded system over (N+1)*n coordinates.

    Stage coupling follows the Taylor coefficient recurrence
    v_{k+1} = tau * M * v_k / (k+1) with M = A D^-1; a unit source sits at
    stage 0, node s, and the back-transform is e^-tau times the stage sum.

    Per-stage thresholds are eps * d_u / (2 (N+1) vol(V)): the volume
    normalization caps the converged residual mass at eps/2, which together
    with the tail rule for N makes the l1 error of the push estimate at most
    eps plus the cited truncation quality.
    """
    if tau <= 0.0:
        raise SystemError("tau must be positive")
    if not 0 <= s < g.n:
        raise SystemError("source out of range")
    if g.degrees[s] < 1:
        raise SystemError("source must have at least one neighbor")
    n_stages = hk_stage_count(tau, eps)
    base = _make_operator(g, 1.0, "rw")
    stage_w = tau / np.arange(1.0, n_stages + 1.0) if n_stages else np.empty(0)
    op = OperatorQ(
        graph=g, beta=1.0, pkind="rw", arc_weights=base.arc_weights,
        p_max=base.p_max, contraction_ok=True,
        stage_count=n_stages, stage_weights=stage_w,
    )
    dim = (n_stages + 1) * g.n
    b = np.zeros(dim)
    b[s] = 1.0  # stage 0 slot of node s
    vol = float(g.degrees.sum())
    theta = np.tile(_theta_vec(g, eps / (2.0 * (n_stages + 1) * vol)), n_stages + 1)
    return DiffusionSystem(op=op, b=b, theta=theta, problem="hk", tau=tau, eps=eps,
                           source=s)


def make_generalized_system(g: CsrGraph, alpha: float, source: np.ndarray,
                            eps: float, beta_exp: float) -> DiffusionSystem:
    """Degree-generalized propagation (I - (1-alpha) D^-b A D^(b-1)) x = alpha*source.

    beta_exp = 0 recovers PPR, beta_exp = 0.5 the symmetric-normalized form.
    Used as the oracle side for the generalized feature push.
    """
    if not 0.0 < alpha < 1.0:
        raise SystemError("alpha must be in (0, 1)")
    if not 0.0 <= beta_exp <= 1.0:
        raise SystemError("beta_exp must be in [0, 1]")
    source = np.asarray(source, dtype=np.float64)
    if source.shape != (g.n,):
        raise SystemError("source must be a length-n vector")
    op = _make_operator(g, 1.0 - alpha, "gen", b_exp=beta_exp)
    return DiffusionSystem(
        op=op, b=alpha * source, theta=_theta_vec(g, eps * alpha, 1.0 - beta_exp),
        problem="gen", alpha=alpha, eps=eps, beta_exp=beta_exp,
    )


def _hk_apply(sys: DiffusionSystem, v: np.ndarray) -> np.ndarray:
    """(I - S (x) M) v on the stage-expanded coordinates."""
    n = sys.graph.n
    n_stages = sys.op.stage_count
    stages = v.reshape(n_stages + 1, n)
    out = stages.copy()
    for k in range(n_stages):
        out[k + 1] -= sys.op.stage_weights[k] * sys.op.propagate(stages[k])
    return out.reshape(-1)


def dense_solve(sys: DiffusionSystem) -> np.ndarray:
    """Direct dense solution of Q x = b, back-transformed to f.

    For the heat kernel the block lower-bidiagonal structure is solved by
    exact forward substitution on dense propagation matrices.
    """
    g = sys.graph
    if g.n > _DENSE_GUARD:
        raise SystemError(f"dense solve guard: n={g.n} > {_DENSE_GUARD}")
    if sys.problem == "hk":
        m_dense = np.eye(g.n) - sys.op.dense_matrix()  # bare M = A D^-1
        n_stages = sys.op.stage_count
        v = np.zeros((n_stages + 1, g.n))
        v[0] = sys.b[:g.n]
        for k in range(n_stages):
            v[k + 1] = sys.op.stage_weights[k] * (m_dense @ v[k])
        return sys.back_transform(v.reshape(-1))
    if sys.symmetrized:
        # zero-degree rows of Q are identity rows either way
        dsqrt = np.sqrt(np.maximum(g.degrees.astype(np.float64), 1.0))
        q_sym = (sys.op.dense_matrix() * dsqrt[np.newaxis, :]) / dsqrt[:, np.newaxis]
        x_sym = scipy.linalg.solve(q_sym, sys.b / dsqrt, assume_a="sym")
        return sys.back_transform(dsqrt * x_sym)
    q = sys.op.dense_matrix()
    try:
        x = scipy.linalg.solve(q, sys.b)
    except scipy.linalg.LinAlgError as exc:
        raise SystemError("singular operator") from exc
    return sys.back_transform(x)


def series_oracle(sys: DiffusionSystem, terms: int) -> np.ndarray:
    """Truncated series sum_{k<=K} c_k M^k s, back-transformed to f.

    Coefficients: alpha(1-alpha)^k for PPR and the generalized form, alpha^k
    for Katz, e^-tau tau^k / k! for the heat kernel.
    """
    if terms < 0:
        raise SystemError("terms must be >= 0")
    g = sys.graph
    if sys.problem == "ppr" or sys.problem == "gen":
        vk = sys.b / sys.alpha  # unit source
        coeff = sys.alpha
        ratio = 1.0 - sys.alpha
    elif sys.problem == "katz":
        vk = sys.b.copy()
        coeff = 1.0
        ratio = sys.alpha
    elif sys.problem == "hk":
        vk = np.zeros(g.n)
        vk[sys.source] = 1.0
        coeff = math.exp(-sys.tau)
        ratio = None  # tau/k per step
    else:
        raise SystemError(f"unknown problem {sys.problem}")
    # propagate with the bare M (strip the damping factor from arc weights)
    bare = sys.op.arc_weights / sys.op.beta if sys.op.beta else sys.op.arc_weights
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)

    def step(x: np.ndarray) -> np.ndarray:
        out = np.zeros(g.n)
        np.add.at(out, g.targets, bare * x[src])
        return out

    total = coeff * vk
    for k in range(1, terms + 1):
        vk = step(vk)
        coeff = coeff * ratio if ratio is not None else coeff * sys.tau / k
        total += coeff * vk
    if sys.problem == "katz":
        total -= sys.b
        return total
    return total
