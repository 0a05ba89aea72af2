"""Adaptive dimension reduction driven by dual certificates.

Starting from the groups that correlate best with ``y``, each round solves
the problem restricted to the coordinates ``E_x`` untouched by inactive
groups, evaluates a certificate with the full design at the restricted
solution, and activates the most violating groups. The loop ends when no
group outside the active set violates its certificate and the inner solve
converged; the restricted solution is then optimal for the full problem.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .certificates import beta_group_norms, correlation_init, lasso_certificate, min_norm_dual
from .data import ProblemData
from .errors import OuterLoopError
from .groups import (
    GroupCovering,
    LiftingOperator,
    SupportState,
    build_lifting,
    compute_supports,
    covering_of,
    effective_gram_diag,
)
from .solvers import SolverConfig, admm_solve, pd_solve, varpro_solve
from .solvers.common import objective
from .trace import SolverTrace

OPTIONS = {"I": "lasso", "II": "ogn", "lasso": "lasso", "ogn": "ogn"}


@dataclass(frozen=True)
class AdaDropsConfig:
    """Outer-loop settings.

    ``option`` is ``"lasso"`` (``"I"``) or ``"ogn"`` (``"II"``). A group
    outside the active set violates when its margin (``||beta_G|| / w`` or
    ``||u_J||``) is at least ``1 + outer_tol``.
    """

    option: str = "ogn"
    init_size: int = 10
    growth_cap: int = 10
    inner: SolverConfig = SolverConfig(tol=1e-8)
    outer_tol: float = 0.0
    max_outer_rounds: int = 1000

    def __post_init__(self):
        if self.option not in OPTIONS:
            raise ValueError(f"option must be one of {sorted(OPTIONS)}, got {self.option!r}")
        object.__setattr__(self, "option", OPTIONS[self.option])
        if self.init_size < 1:
            raise ValueError("init_size must be >= 1")
        if self.growth_cap < 1:
            raise ValueError("growth_cap must be >= 1")
        if self.max_outer_rounds < 1:
            raise ValueError("max_outer_rounds must be >= 1")


@dataclass(frozen=True, eq=False)
class RestrictedProblem:
    """The problem on ``E_x`` with compacted columns.

    ``groups`` lists the original indices of the active groups that keep at
    least one coordinate; ``rows`` maps each compact lifted row to its row in
    the full lifting. ``problem``/``L`` are ``None`` when ``E_x`` is empty.
    """

    support: SupportState
    columns: np.ndarray
    groups: np.ndarray
    rows: np.ndarray
    problem: ProblemData | None
    covering: GroupCovering | None
    L: LiftingOperator | None
    gram_diag: np.ndarray

    @property
    def kappa(self) -> int:
        return int(self.columns.size)

    def scatter(self, x_sub) -> np.ndarray:
        """Zero-pad a compact solution back to length ``n``."""
        x = np.zeros(self.support.ex.size)
        x[self.columns] = x_sub
        return x


def build_restricted(problem: ProblemData, L: LiftingOperator, active,
                     covering: GroupCovering | None = None) -> RestrictedProblem:
    covering = covering_of(L) if covering is None else covering
    S = compute_supports(covering, L, active)
    columns = S.ext_coord_support
    gdiag = effective_gram_diag(L, S)
    if columns.size == 0:
        empty = np.zeros(0, dtype=np.int64)
        return RestrictedProblem(S, columns, empty, empty, None, None, None, gdiag)

    compact = np.full(L.n, -1, dtype=np.int64)
    compact[columns] = np.arange(columns.size)
    groups, members, rows = [], [], []
    for t in S.active_groups:
        r = np.arange(L.offsets[t], L.offsets[t + 1])
        r = r[S.ex[L.row_to_col[r]]]
        if r.size:
            groups.append(t)
            members.append(compact[L.row_to_col[r]])
            rows.append(r)
    groups = np.asarray(groups, dtype=np.int64)
    sub_cov = GroupCovering(columns.size, members, L.weights[groups])
    sub = ProblemData(problem.A[:, columns], problem.y, problem.lam)
    return RestrictedProblem(
        S, columns, groups, np.concatenate(rows), sub, sub_cov, build_lifting(sub_cov), gdiag
    )


def certificate_margins(problem: ProblemData, L: LiftingOperator, S: SupportState, x,
                        covering: GroupCovering | None = None):
    """Per-group ``||beta_G|| / w`` and ``||u_J||`` with ``u = Lhat (Lhat^T Lhat)^{-1} beta``."""
    covering = covering_of(L) if covering is None else covering
    beta = lasso_certificate(problem, x)
    ratio = beta_group_norms(beta, covering) / covering.weights
    u_norm = L.block_norms(min_norm_dual(L, S, beta))
    return ratio, u_norm


def support_update(problem: ProblemData, L: LiftingOperator, S: SupportState, x, option="ogn",
                   growth_cap: int | None = None, outer_tol: float = 0.0, covering=None):
    """Violating groups outside ``S.active``, largest margin first, at most ``growth_cap``."""
    ratio, u_norm = certificate_margins(problem, L, S, x, covering)
    margin = ratio if OPTIONS[option] == "lasso" else u_norm
    return _select(margin, S.active, growth_cap, outer_tol)


def _select(margin, active, growth_cap, outer_tol):
    cand = np.flatnonzero((margin >= 1.0 + outer_tol) & ~active)
    order = cand[np.argsort(-margin[cand], kind="stable")]
    if growth_cap is not None:
        order = order[:growth_cap]
    return np.sort(order)


@dataclass
class RoundInfo:
    round: int
    active: np.ndarray
    kappa: int
    added: np.ndarray
    beta_ratio: np.ndarray
    u_norm: np.ndarray
    converged: bool
    n_iter: int


@dataclass
class AdaDropsResult:
    x: np.ndarray
    trace: SolverTrace
    converged: bool
    active: np.ndarray
    rounds: list = field(default_factory=list)
    state: dict = field(default_factory=dict)

    @property
    def kappa(self) -> int:
        return self.rounds[-1].kappa if self.rounds else 0

    @property
    def objective(self) -> float:
        return self.trace.last["obj"] if self.trace.last else float("nan")


def _inner(solver, R: RestrictedProblem, cfg, x_full, memory):
    """Run the inner solver on ``R`` warm-started from ``x_full`` and stored duals."""
    x0 = x_full[R.columns]
    seen = memory["seen"][R.rows]
    kw = {}
    if solver == "varpro":
        v0 = memory["v"][R.groups].copy()
        v0[v0 == 0.0] = 1.0  # a frozen v never moves again, so revive it
        kw["v0"] = v0
    else:
        kw["psi0"] = np.where(seen, memory["psi"][R.rows], 0.0)
        if solver == "admm":
            kw["z0"] = np.where(seen, memory["z"][R.rows], R.L.lift(x0))
    fn = {"pd": pd_solve, "admm": admm_solve, "varpro": varpro_solve}[solver]
    if solver == "varpro":
        res = fn(R.problem, R.L, cfg, kappa=R.kappa, **kw)
        memory["v"][R.groups] = res.state["v"]
    else:
        res = fn(R.problem, R.L, cfg, x0=x0, kappa=R.kappa, **kw)
        memory["psi"][R.rows] = res.state["psi"]
        if solver == "admm":
            memory["z"][R.rows] = res.state["z"]
    memory["seen"][R.rows] = True
    return res


def adadrops_run(problem: ProblemData, L: LiftingOperator, solver: str = "admm",
                 cfg: AdaDropsConfig = AdaDropsConfig(), init=None) -> AdaDropsResult:
    """Certificate-driven outer loop around ``pd``, ``admm`` or ``varpro``.

    ``init`` overrides the correlation-based initial group set.
    """
    if solver not in ("pd", "admm", "varpro"):
        raise ValueError(f"unknown solver {solver!r}")
    covering = covering_of(L)
    if init is None:
        init = correlation_init(problem, covering, min(cfg.init_size, L.n_groups))
    active = np.zeros(L.n_groups, dtype=bool)
    active[np.asarray(init, dtype=np.int64)] = True

    memory = {
        "seen": np.zeros(L.p, dtype=bool),
        "psi": np.zeros(L.p),
        "z": np.zeros(L.p),
        "v": np.ones(L.n_groups),
    }
    x = np.zeros(L.n)
    trace = SolverTrace()
    rounds: list[RoundInfo] = []
    t0 = time.perf_counter()
    it_offset = 0
    for rnd in range(1, cfg.max_outer_rounds + 1):
        R = build_restricted(problem, L, active, covering)
        if R.problem is None:
            x = np.zeros(L.n)
            converged, n_iter = True, 0
            trace.record(it_offset + 1, objective(problem, L, x), 0.0, 0)
            it_offset += 1
        else:
            res = _inner(solver, R, cfg.inner, x, memory)
            x = R.scatter(res.x)
            converged, n_iter = res.converged, res.n_iter
            trace.extend(res.trace, it_offset, time.perf_counter() - t0 - res.trace.elapsed())
            it_offset += n_iter

        ratio, u_norm = certificate_margins(problem, L, R.support, x, covering)
        margin = ratio if cfg.option == "lasso" else u_norm
        added = _select(margin, active, cfg.growth_cap, cfg.outer_tol)
        rounds.append(RoundInfo(rnd, active.copy(), R.kappa, added, ratio, u_norm, converged, n_iter))
        trace.add_round(rnd, R.kappa, added, cfg.option)
        if added.size == 0 and converged:
            return AdaDropsResult(x, trace, True, active, rounds, memory)
        active[added] = True
    raise OuterLoopError(
        f"no certified solution after {cfg.max_outer_rounds} outer rounds",
        active=np.flatnonzero(active),
    )
