"""First-price equilibrium bids via the hazard-scaled tradeoff ODE.

In a symmetric increasing equilibrium a bidder of type v bids so that
the marginal cost of bidding higher (paying more when winning) exactly
offsets the marginal gain (winning more often).  That balance is the
initial value problem

    beta'(v) = hazard(v) * tradeoff(v - beta(v); v),

where ``hazard`` is the log-derivative of the win probability in the
report at the truthful point and ``tradeoff`` converts the jump from
the outside option to the winning surplus into money units through the
bidder's marginal utility.

The win probability vanishes at the bottom type, so the equation is
singular there.  Integration therefore starts a small offset above the
bottom, with the initial bid obtained from an implicit micro-step: the
starting slope solves slope = hazard * tradeoff evaluated at the bid
the slope itself implies, clipped so the starting bid keeps strictly
positive surplus.  The attracting character of the singular point makes
the solution insensitive to the exact offset.
"""

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import (
    ConfigError,
    NonmonotoneSolution,
    NonpositiveSurplus,
    OrderingViolation,
    SingularHazard,
    SolverWarning,
)
from .outcomes import ConstantOutside, OutsideOption
from .utility import LinearUtility, Utility, effective_utility
from .values import ValueModel

#: default relative start offset above the bottom type
START_OFFSET_FACTOR = 1e-6
#: boundary-bid tolerance when validating configurations
_BOUNDARY_TOL = 1e-9


def marginal_tradeoff(utility, x, s_v):
    """(u(x) - u(s)) / u'(x): money value of winning at surplus x.

    Requires strictly positive surplus over the outside option s_v.
    """
    if not x > s_v:
        raise NonpositiveSurplus(
            f"winning surplus {x:g} does not exceed the outside option {s_v:g}"
        )
    return _tradeoff_raw(utility, x, s_v)


def _tradeoff_raw(utility, x, s_v):
    return (utility.value(x) - utility.value(s_v)) / utility.deriv(x)


def closed_form_crra_uniform(n, rho):
    """Linear-bid coefficient for IID uniform values, zero outside option.

    With constant relative risk aversion rho < 1 the equilibrium bid is
    beta(v) = (n - 1) / (n - rho) * v.
    """
    if n < 2:
        raise ConfigError(f"need at least two bidders, got {n}")
    if not 0 <= rho < 1:
        raise ConfigError(f"closed form needs 0 <= rho < 1, got {rho}")
    return (n - 1) / (n - rho)


@dataclass
class FPAScenario:
    """A first-price environment plus solver knobs.

    ``transform`` composes a concave bend on top of ``utility``; solvers
    optimize the composed function when it is present.  ``boundary_bid``
    defaults to zero surplus at the bottom type.
    """

    values: ValueModel
    outside: OutsideOption = field(default_factory=ConstantOutside)
    utility: Utility = field(default_factory=LinearUtility)
    transform: Optional[Utility] = None
    boundary_bid: Optional[float] = None
    grid: int = 257
    ode_tol: float = 1e-8
    start_offset: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.grid, (int, np.integer)) or self.grid < 64:
            raise ConfigError(f"grid must be an integer >= 64, got {self.grid}")
        if not self.ode_tol > 0:
            raise ConfigError(f"ode_tol must be > 0, got {self.ode_tol}")
        lo, hi = self.values.support
        span = hi - lo
        if self.start_offset is None:
            self.start_offset = START_OFFSET_FACTOR * span
        if not 0 < self.start_offset < span / 2:
            raise ConfigError(
                f"start offset must be in (0, {span / 2:g}), got {self.start_offset}"
            )
        zero_surplus = lo - float(self.outside.value(lo))
        if self.boundary_bid is None:
            self.boundary_bid = zero_surplus
        if self.boundary_bid > zero_surplus + _BOUNDARY_TOL:
            raise ConfigError(
                f"boundary bid {self.boundary_bid:g} exceeds the zero-surplus "
                f"bid {zero_surplus:g} at the bottom type"
            )
        interior = self.report_grid()[1:]
        room = interior - np.asarray(self.outside.value(interior)) - self.boundary_bid
        if np.any(room <= 0):
            raise ConfigError(
                "no undominated bids above the boundary bid for some types; "
                "lower the boundary bid or the outside option"
            )

    @property
    def span(self):
        return self.values.span

    @property
    def start(self):
        return self.values.lo + self.start_offset

    def report_grid(self):
        return np.linspace(self.start, self.values.hi, self.grid)

    def effective_utility(self):
        return effective_utility(self.utility, self.transform)


@dataclass
class EquilibriumSolution:
    """A solved bid function on a reporting grid.

    ``residuals`` holds the per-point consistency check (ODE defect for
    first price, indifference residual for second price) and
    ``derivative_check`` its normalized maximum.
    """

    grid: np.ndarray
    bids: np.ndarray
    residuals: np.ndarray
    derivative_check: float
    monotone: bool
    v_floor: float
    boundary_bid: float
    _dense: object = field(default=None, repr=False, compare=False)
    _spline: object = field(default=None, repr=False, compare=False)

    def _core_bid(self, t):
        if self._dense is not None:
            out = self._dense(t)
            return out[0] if out.ndim > np.ndim(t) else out
        if self._spline is None:
            if len(self.grid) >= 4:
                self._spline = CubicSpline(self.grid, self.bids)
            else:
                self._spline = lambda t: np.interp(t, self.grid, self.bids)
        return self._spline(t)

    def bid_at(self, t):
        """Bid of a type reporting t, interpolating between grid points.

        Below the first grid point the bid ramps linearly down to the
        boundary bid at ``v_floor``; above the last it stays flat.
        """
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        out = np.empty_like(t)
        g0, g1 = self.grid[0], self.grid[-1]
        below = t < g0
        above = t > g1
        mid = ~(below | above)
        if np.any(mid):
            out[mid] = self._core_bid(t[mid])
        if np.any(below):
            if g0 > self.v_floor:
                frac = (t[below] - self.v_floor) / (g0 - self.v_floor)
                frac = np.clip(frac, 0.0, 1.0)
                out[below] = self.boundary_bid + frac * (self.bids[0] - self.boundary_bid)
            else:
                out[below] = self.bids[0]
        if np.any(above):
            out[above] = self.bids[-1]
        return float(out[0]) if scalar else out

    @classmethod
    def from_grid(cls, grid, bids, residuals=None, v_floor=None, boundary_bid=None):
        """Rebuild a solution from tabulated values (e.g. a CSV round trip)."""
        grid = np.asarray(grid, dtype=float)
        bids = np.asarray(bids, dtype=float)
        if residuals is None:
            residuals = np.zeros_like(grid)
        diffs = np.diff(bids)
        return cls(
            grid=grid,
            bids=bids,
            residuals=np.asarray(residuals, dtype=float),
            derivative_check=float(np.max(np.abs(residuals))),
            monotone=bool(np.all(diffs > 0)),
            v_floor=float(grid[0]) if v_floor is None else float(v_floor),
            boundary_bid=float(bids[0]) if boundary_bid is None else float(boundary_bid),
        )


def _interpolant_slope(dense, t, span):
    """Derivative of the integrator's dense output, staying inside one piece.

    The dense output is piecewise polynomial between accepted steps;
    differencing inside a single piece avoids both interpolation seams
    and any circular use of the vector field.
    """
    ts = dense.ts
    j = int(np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 2))
    lo, hi = ts[j], ts[j + 1]
    h = min(1e-5 * span, (hi - lo) / 8.0)
    c = min(max(t, lo + h), hi - h)
    return float((dense(c + h)[0] - dense(c - h)[0]) / (2.0 * h))


def solve_fpa(scenario):
    """Solve the first-price ODE for the scenario's effective utility.

    Returns an :class:`EquilibriumSolution` on the scenario's reporting
    grid.  Raises ``SingularHazard`` when the boundary cannot be
    resolved, ``DomainError`` when the utility domain is breached during
    integration, and ``NonmonotoneSolution`` when the solved bids
    decrease over more than two grid cells.
    """
    u = scenario.effective_utility()
    vm = scenario.values
    outside = scenario.outside
    lo, hi = vm.support
    span = vm.span
    eps = scenario.start_offset
    v0 = scenario.start
    b0 = scenario.boundary_bid

    s0 = float(outside.value(v0))
    cap = v0 - s0 - b0
    if cap <= 0:
        raise SingularHazard(
            "no room for an undominated bid at the regularized start"
        )
    lam0 = vm.hazard(v0)

    def slope_gap(slope):
        x = v0 - (b0 + eps * slope)
        return slope - lam0 * _tradeoff_raw(u, x, s0)

    slope_hi = cap * (1.0 - 1e-3) / eps
    if slope_gap(slope_hi) <= 0.0:
        # hazard too strong for the implicit step: clip to the surplus cap
        y0 = b0 + eps * slope_hi
    else:
        slope = brentq(slope_gap, 0.0, slope_hi, maxiter=200)
        y0 = b0 + eps * slope

    def rhs(v, y):
        x = v - y[0]
        s_v = float(outside.value(v))
        if x <= s_v:
            # only transient trial stages land here; push back toward
            # positive surplus by flattening the field
            return (0.0,)
        return (vm.hazard(v) * _tradeoff_raw(u, x, s_v),)

    tol_int = max(5e-14, min(scenario.ode_tol, 1.0) * 1e-3)
    sol = solve_ivp(
        rhs,
        (v0, hi),
        (y0,),
        method="DOP853",
        dense_output=True,
        rtol=tol_int,
        atol=tol_int,
        first_step=min(eps / 4.0, span / 1000.0),
    )
    if not sol.success:
        raise SingularHazard(f"integration failed: {sol.message}")

    grid = scenario.report_grid()
    bids = sol.sol(grid)[0]

    s_grid = np.asarray(outside.value(grid))
    if np.any(grid - s_grid - bids <= 0):
        raise SingularHazard("bid function reached the zero-surplus frontier")

    diffs = np.diff(bids)
    monotone = bool(np.all(diffs > 0))
    if not monotone:
        run = longest = 0
        for d in diffs:
            run = run + 1 if d <= 0 else 0
            longest = max(longest, run)
        if longest > 2:
            raise NonmonotoneSolution(
                f"bids decrease over {longest} consecutive grid cells"
            )
        warnings.warn(
            "solved bids are not strictly increasing everywhere",
            SolverWarning,
            stacklevel=2,
        )

    residuals = np.empty_like(grid)
    scaled = np.empty_like(grid)
    for i, v in enumerate(grid):
        field_val = vm.hazard(v) * _tradeoff_raw(u, v - bids[i], float(s_grid[i]))
        slope = _interpolant_slope(sol.sol, v, span)
        residuals[i] = abs(slope - field_val)
        scaled[i] = residuals[i] / (1.0 + abs(field_val))

    return EquilibriumSolution(
        grid=grid,
        bids=bids,
        residuals=residuals,
        derivative_check=float(np.max(scaled[1:-1])) if len(grid) > 2 else float(np.max(scaled)),
        monotone=monotone,
        v_floor=lo,
        boundary_bid=b0,
        _dense=sol.sol,
    )


@dataclass
class ComparisonReport:
    """Bid functions before and after a concave bend of the utility."""

    grid: np.ndarray
    beta: np.ndarray
    beta_hat: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.beta_hat - self.beta

    @property
    def min_d(self):
        return float(np.min(self.d))

    @property
    def max_d(self):
        return float(np.max(self.d))


def compare_risk_aversion_fpa(scenario):
    """Solve with and without the transform; more risk aversion bids higher.

    Raises :class:`OrderingViolation` (with the report attached) when
    the transformed bids fall below the baseline beyond 10x the ODE
    tolerance.
    """
    if scenario.transform is None:
        raise ConfigError("comparison needs a transform on the scenario")
    base = solve_fpa(replace(scenario, transform=None))
    bent = solve_fpa(scenario)
    grid = base.grid
    s_grid = np.asarray(scenario.outside.value(grid))
    u = scenario.utility
    uh = scenario.effective_utility()
    m_base = np.array(
        [_tradeoff_raw(u, v - b, s) for v, b, s in zip(grid, base.bids, s_grid)]
    )
    m_bent = np.array(
        [_tradeoff_raw(uh, v - b, s) for v, b, s in zip(grid, bent.bids, s_grid)]
    )
    report = ComparisonReport(
        grid=grid,
        beta=base.bids,
        beta_hat=bent.bids,
        diagnostics={
            "tradeoff_base": m_base,
            "tradeoff_bent": m_bent,
            "tradeoff_gap": m_bent - m_base,
        },
    )
    if report.min_d < -10.0 * scenario.ode_tol:
        raise OrderingViolation(
            f"transformed bids fall {-report.min_d:.3e} below the baseline",
            report=report,
        )
    return report
