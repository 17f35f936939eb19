"""Portfolio optimization under a Recovery AVaR objective.

For a piecewise-constant level function the portfolio's Recovery AVaR is a
finite maximum of tail averages of R @ x - r_i * Z.  Each tail average has
the variational form

    min_v  (1/alpha_i) E[(v - (R @ x - r_i Z))^+] - v,

so minimizing the worst piece is a linear program once the expectation is
written over scenarios.  Each piece carries its own threshold variable: the
piece minimizers need not align, so a single threshold shared across pieces
can strictly overshoot the finite maximum (the worst-case tail averages sit
at different quantiles); with separate thresholds the epigraph formulation
is exact.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import NumericalError, TargetReturnInfeasible
from .measures import LEVEL_EPS, avar_empirical
from .recovery import RecoveryFunction
from .samples import WeightedSample
from .simplex import LinearProgram, LPSolution, solve_lp

__all__ = [
    "PortfolioProblem", "position_sample", "psi", "MinimaxResult",
    "minimax_check", "build_lp", "PortfolioSolution", "solve_portfolio",
    "FrontierPoint", "FrontierResult", "efficient_frontier",
    "read_problem_csv", "write_frontier_csv",
]

MINIMAX_TOL = 1e-6
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PortfolioProblem:
    """Scenario data for the risk-return tradeoff.

    ``returns`` holds one-period asset returns per scenario (M x K);
    ``liability_fraction`` the liabilities as a fraction of the budget.
    ``target_return`` of None drops the expected-return constraint.
    """

    returns: np.ndarray
    liability_fraction: np.ndarray
    gamma: RecoveryFunction
    budget: float = 1.0
    weights: np.ndarray = None  # type: ignore[assignment]
    target_return: float | None = None

    def __post_init__(self) -> None:
        r = np.atleast_2d(np.asarray(self.returns, dtype=float))
        z = np.atleast_1d(np.asarray(self.liability_fraction, dtype=float))
        if r.shape[0] != z.size or r.size == 0:
            raise ValueError("returns must be (M, K) with liability fractions of length M")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(z))):
            raise ValueError("scenario data must be finite")
        if self.budget <= 0.0:
            raise ValueError("budget must be positive")
        if self.weights is None:
            w = np.full(r.shape[0], 1.0 / r.shape[0])
        else:
            w = np.atleast_1d(np.asarray(self.weights, dtype=float))
            if w.size != r.shape[0]:
                raise ValueError("weights length must match the scenario count")
            if np.any(w <= 0.0) or abs(float(np.sum(w)) - 1.0) > 1e-12:
                raise ValueError("weights must be positive and sum to 1")
        for name, arr in (("returns", r), ("liability_fraction", z), ("weights", w)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def n_scenarios(self) -> int:
        return self.returns.shape[0]

    def mean_returns(self) -> np.ndarray:
        return self.weights @ self.returns

    def with_target(self, c: float | None) -> "PortfolioProblem":
        return replace(self, target_return=c)


def position_sample(problem: PortfolioProblem, x) -> WeightedSample:
    """The (R @ x - Z, Z) sample whose Recovery AVaR the program minimizes."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pos = problem.returns @ x - problem.liability_fraction
    return WeightedSample(pos, problem.liability_fraction, problem.weights)


def psi(problem: PortfolioProblem, i: int, x, v: float) -> float:
    """Auxiliary function for piece i: (1/alpha_i) E[(v - (R@x - r_i Z))^+] - v."""
    pieces = problem.gamma.pieces()
    if not (0 <= i < len(pieces)):
        raise ValueError(f"piece index {i} out of range")
    r_i, alpha_i = pieces[i]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    shortfall = v - (problem.returns @ x - r_i * problem.liability_fraction)
    expect = float(np.dot(problem.weights, np.maximum(shortfall, 0.0)))
    return expect / alpha_i - float(v)


def _weighted_quantile_interval(values: np.ndarray, weights: np.ndarray,
                                alpha: float) -> tuple[float, float]:
    order = np.argsort(values, kind="stable")
    vs = values[order]
    c = np.cumsum(weights[order])
    lo = int(np.searchsorted(c, alpha - LEVEL_EPS, side="left"))
    hi = int(np.searchsorted(c, alpha + LEVEL_EPS, side="right"))
    lo = min(lo, vs.size - 1)
    hi = min(hi, vs.size - 1)
    return float(vs[lo]), float(vs[hi])


def _golden_min(f, lo: float, hi: float, tol: float = 1e-10) -> tuple[float, float]:
    """Golden-section minimum of a convex scalar function on [lo, hi];
    returns (argmin, best value seen, including the endpoint evaluations)."""
    best_x, best_f = lo, f(lo)
    for x0 in (hi,):
        f0 = f(x0)
        if f0 < best_f:
            best_x, best_f = x0, f0
    a, b = lo, hi
    x1 = b - _INVPHI * (b - a)
    x2 = a + _INVPHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INVPHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INVPHI * (b - a)
            f2 = f(x2)
        for xx, ff in ((x1, f1), (x2, f2)):
            if ff < best_f:
                best_x, best_f = xx, ff
    return best_x, best_f


@dataclass(frozen=True)
class MinimaxResult:
    lhs: float   # variational route: max over pieces of the inner minimum
    rhs: float   # direct route: max over pieces of the sorted tail average
    gap: float
    v_star: float  # inner minimizer of the binding piece


def minimax_check(problem: PortfolioProblem, x) -> MinimaxResult:
    """Cross-check the two evaluations of the piecewise risk at allocation x.

    Every piece's tail average is computed twice: by scalar minimization of
    its variational form over the quantile bracket (where the minimum is
    attained) with golden-section refinement, and by the direct sorted tail
    average.  The check confirms the max-min exchange over the per-piece
    thresholds: minimizing each piece over its own threshold and then taking
    the worst piece reproduces the finite-max risk measure.  Raises
    :class:`NumericalError` if the two routes disagree beyond 1e-6.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    pieces = problem.gamma.pieces()
    lhs = -math.inf
    rhs = -math.inf
    v_star = math.nan
    for i, (r_i, alpha_i) in enumerate(pieces):
        w_vals = problem.returns @ x - r_i * problem.liability_fraction
        lo, hi = _weighted_quantile_interval(w_vals, problem.weights, alpha_i)
        v_min, inner = _golden_min(lambda v, i=i: psi(problem, i, x, v), lo, hi)
        if inner > lhs:
            lhs, v_star = inner, v_min
        rhs = max(rhs, avar_empirical(w_vals, problem.weights, alpha_i))
    gap = abs(rhs - lhs)
    if gap > MINIMAX_TOL:
        raise NumericalError(f"minimax gap {gap:.3e} exceeds {MINIMAX_TOL:.1e}")
    return MinimaxResult(lhs, rhs, gap, v_star)


def build_lp(problem: PortfolioProblem) -> LinearProgram:
    """Scenario linear program: variables (x, v_1..v_p, Upsilon, u_{i,m}),
    minimize Upsilon over the per-piece epigraph rows.

    Scenario weights generalize the uniform 1/M coefficients: the tail row
    for piece i reads (1/alpha_i) sum_m w_m u_{i,m} - v_i <= Upsilon, and the
    hinge rows read u_{i,m} >= v_i - sum_k x_k R_{m,k} + r_i Z_m.  One
    threshold per piece keeps the optimal Upsilon equal to the piecewise-max
    risk of the optimal allocation; a shared threshold would only bound it
    from above.
    """
    m_sc = problem.n_scenarios
    k = problem.n_assets
    pieces = problem.gamma.pieces()
    p = len(pieces)
    n_var = k + p + 1 + p * m_sc
    idx_ups = k + p

    def v_index(i: int) -> int:
        return k + i

    def u_index(i: int, m: int) -> int:
        return k + p + 1 + i * m_sc + m

    n_ub = p + p * m_sc
    a_ub = np.zeros((n_ub, n_var))
    b_ub = np.zeros(n_ub)
    for i, (r_i, alpha_i) in enumerate(pieces):
        row = a_ub[i]
        row[v_index(i)] = -1.0
        row[idx_ups] = -1.0
        row[u_index(i, 0):u_index(i, m_sc - 1) + 1] = problem.weights / alpha_i
    for i, (r_i, alpha_i) in enumerate(pieces):
        for m in range(m_sc):
            row = a_ub[p + i * m_sc + m]
            row[v_index(i)] = 1.0
            row[:k] = -problem.returns[m]
            row[u_index(i, m)] = -1.0
            b_ub[p + i * m_sc + m] = -r_i * problem.liability_fraction[m]

    means = problem.mean_returns()
    if problem.target_return is None:
        a_eq = np.zeros((1, n_var))
        a_eq[0, :k] = 1.0
        b_eq = np.array([1.0])
    else:
        c = float(problem.target_return)
        if not (float(np.min(means)) - 1e-12 <= c <= float(np.max(means)) + 1e-12):
            raise TargetReturnInfeasible(
                f"target return {c!r} outside the attainable hull "
                f"[{float(np.min(means))!r}, {float(np.max(means))!r}]"
            )
        a_eq = np.zeros((2, n_var))
        a_eq[0, :k] = 1.0
        a_eq[1, :k] = means
        b_eq = np.array([1.0, c])

    lower = np.concatenate([np.zeros(k), np.full(p + 1, -np.inf), np.zeros(p * m_sc)])
    upper = np.concatenate([np.ones(k), np.full(p + 1, np.inf), np.full(p * m_sc, np.inf)])
    objective = np.zeros(n_var)
    objective[idx_ups] = 1.0
    return LinearProgram(objective, a_ub, b_ub, a_eq, b_eq, lower, upper)


@dataclass(frozen=True)
class PortfolioSolution:
    status: str
    x: np.ndarray | None
    v: np.ndarray | None      # per-piece thresholds
    upsilon: float
    objective: float
    lp_solution: LPSolution


def solve_portfolio(problem: PortfolioProblem) -> PortfolioSolution:
    """Build and solve the scenario LP; cross-checks the reported optimum
    against the piece functions at the solution."""
    lp = build_lp(problem)
    sol = solve_lp(lp)
    if sol.status != "Optimal":
        return PortfolioSolution(sol.status, None, None, math.nan, math.nan, sol)
    k = problem.n_assets
    p = problem.gamma.n_pieces
    x = sol.x[:k]
    v = sol.x[k:k + p]
    upsilon = float(sol.x[k + p])
    if sol.residual > 1e-7:
        raise NumericalError(f"LP feasibility residual {sol.residual:.3e} exceeds 1e-7")
    recomputed = max(psi(problem, i, x, float(v[i])) for i in range(p))
    if abs(recomputed - upsilon) > 1e-7:
        raise NumericalError(
            f"LP objective {upsilon!r} disagrees with the piece recomputation {recomputed!r}"
        )
    return PortfolioSolution("Optimal", x, v, upsilon, sol.objective, sol)


@dataclass(frozen=True)
class FrontierPoint:
    c: float
    status: str
    upsilon: float       # Recovery AVaR of the unit-budget position
    risk: float          # money scale: -budget + budget * upsilon
    x: tuple[float, ...]


@dataclass(frozen=True)
class FrontierResult:
    points: tuple[FrontierPoint, ...]
    convex_in_c: bool

    def optimal_points(self) -> list[FrontierPoint]:
        return [p for p in self.points if p.status == "Optimal"]


def efficient_frontier(problem: PortfolioProblem, c_grid) -> FrontierResult:
    """Minimize downside risk for each target return on the grid.

    Reports both the raw unit-budget optimum and the money-scaled risk
    -budget + budget * optimum.  Infeasible targets are recorded and the
    sweep continues.  Convexity of the optimum in the target is checked with
    a 1e-6 slack and flagged on the result.
    """
    points: list[FrontierPoint] = []
    for c in np.atleast_1d(np.asarray(c_grid, dtype=float)):
        try:
            sol = solve_portfolio(problem.with_target(float(c)))
        except TargetReturnInfeasible:
            points.append(FrontierPoint(float(c), "Infeasible", math.nan, math.nan, ()))
            continue
        if sol.status != "Optimal":
            points.append(FrontierPoint(float(c), sol.status, math.nan, math.nan, ()))
            continue
        risk = -problem.budget + problem.budget * sol.upsilon
        points.append(FrontierPoint(float(c), "Optimal", sol.upsilon, risk,
                                    tuple(float(v) for v in sol.x)))
    solved = [p for p in points if p.status == "Optimal"]
    convex = True
    for left, mid, right in zip(solved, solved[1:], solved[2:]):
        span = right.c - left.c
        if span <= 0.0:
            continue
        interp = (right.c - mid.c) / span * left.upsilon + (mid.c - left.c) / span * right.upsilon
        if mid.upsilon > interp + MINIMAX_TOL:
            convex = False
    return FrontierResult(tuple(points), convex)


def read_problem_csv(path_or_buffer, gamma: RecoveryFunction,
                     budget: float = 1.0) -> PortfolioProblem:
    """Problem CSV: header ``weight,R_1..R_K,Z`` (weight optional)."""
    if hasattr(path_or_buffer, "read"):
        text = path_or_buffer.read()
    else:
        with open(path_or_buffer, "r", encoding="utf-8") as fh:
            text = fh.read()
    rows = [ln.strip() for ln in text.splitlines()]
    rows = [ln for ln in rows if ln and not ln.startswith("#")]
    if not rows:
        raise ValueError("problem CSV is empty")
    cols = [c.strip() for c in rows[0].split(",")]
    has_weight = cols and cols[0] == "weight"
    body = cols[1:] if has_weight else cols
    r_cols = sorted((j for j, c in enumerate(body) if c.startswith("R_")),
                    key=lambda j: int(body[j][2:]))
    if not r_cols or "Z" not in body:
        raise ValueError("problem CSV needs R_1..R_K and Z columns")
    z_col = body.index("Z")
    data = np.asarray([[float(p) for p in ln.split(",")] for ln in rows[1:]], dtype=float)
    offset = 1 if has_weight else 0
    weights = data[:, 0] if has_weight else None
    returns = data[:, [offset + j for j in r_cols]]
    z = data[:, offset + z_col]
    return PortfolioProblem(returns, z, gamma, budget=budget, weights=weights)


def write_frontier_csv(result: FrontierResult, n_assets: int, path_or_buffer) -> None:
    """Columns: c, risk (money scale), upsilon (raw optimum), x_1..x_K, status."""
    cols = ["c", "risk", "upsilon"] + [f"x_{k+1}" for k in range(n_assets)] + ["status"]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for p in result.points:
        xs = list(p.x) if p.x else [math.nan] * n_assets
        buf.write(",".join([repr(p.c), repr(p.risk), repr(p.upsilon)]
                           + [repr(float(v)) for v in xs] + [p.status]) + "\n")
    payload = buf.getvalue()
    if hasattr(path_or_buffer, "write"):
        path_or_buffer.write(payload)
    else:
        with open(path_or_buffer, "w", encoding="utf-8", newline="") as fh:
            fh.write(payload)
