"""Two-sided check of the resonance trace formula and the Weyl-law slope.

For g holomorphic and integrable in a strip containing all resonances,

    2 pi i sum_z g(z) = int g(x + i y1) f'/f(x + i y1) dx - int g(x + i y2) f'/f(x + i y2) dx

with y1 below the resonance strip and y2 > 0 (both lines oriented left to
right; the top one enters with a minus sign because the contour runs
counterclockwise).  In trace form f'/f = -Tr[U' (Id - U)^{-1}].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from . import bounds, secular
from .finder import (
    BoundaryProximityError,
    ContourCounter,
    Rectangle,
    ResonanceSet,
    _unit_hash,
    locate_in_strip,
)
from .graph import GraphClassParams, ParameterError, QuantumGraph
from .quadrature import integrate_segment
from .secular import DomainError

TWO_PI_I = 2j * math.pi


class TruncationError(RuntimeError):
    """Truncated integral or sum would exceed the requested error budget."""


@dataclass(frozen=True)
class GaussianTest:
    """g(z) = exp(-a (z - x0 - i y_anchor)^2)."""

    a: float
    x0: float = 0.0
    y_anchor: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError(f"Gaussian width parameter must be positive, got {self.a}")

    @property
    def z_anchor(self) -> complex:
        return complex(self.x0, self.y_anchor)

    def __call__(self, z):
        return np.exp(-self.a * (np.asarray(z, dtype=complex) - self.z_anchor) ** 2)

    def line_sup(self, y: float) -> float:
        """max over x of |g(x + i y)|."""
        return math.exp(self.a * (y - self.y_anchor) ** 2)

    def window(self, T: float) -> tuple[float, float]:
        return self.x0 - T, self.x0 + T

    def tail_mass(self, y: float, T: float) -> float:
        """Integral of |g(x + i y)| over |x - x0| > T."""
        return self.line_sup(y) * math.sqrt(math.pi / self.a) * float(erfc(math.sqrt(self.a) * T))

    def sup_outside(self, W: float, y_lo: float, y_hi: float) -> float:
        """max |g| over |Re z - x0| >= W, y_lo <= Im z <= y_hi."""
        dy = max(abs(y_lo - self.y_anchor), abs(y_hi - self.y_anchor))
        return math.exp(-self.a * W**2 + self.a * dy**2)


@dataclass(frozen=True)
class GaussianSum:
    """Sum of Gaussian tests; same interface as :class:`GaussianTest`."""

    terms: tuple[GaussianTest, ...]

    @property
    def a(self) -> float:
        return min(t.a for t in self.terms)

    @property
    def x0(self) -> float:
        lo, hi = self.window(0.0)
        return (lo + hi) / 2

    def __call__(self, z):
        return sum(t(z) for t in self.terms)

    def line_sup(self, y):
        return sum(t.line_sup(y) for t in self.terms)

    def window(self, T):
        return min(t.x0 for t in self.terms) - T, max(t.x0 for t in self.terms) + T

    def tail_mass(self, y, T):
        return sum(t.tail_mass(y, T) for t in self.terms)

    def sup_outside(self, W, y_lo, y_hi):
        # the sum window is wider than each term's own window
        return sum(t.sup_outside(W, y_lo, y_hi) for t in self.terms)


@dataclass
class BoundaryIntegral:
    value: complex
    bottom: complex
    top: complex
    y1: float
    y2: float
    T: float
    tail_bound: float
    quad_error: float


def _line_bounds(graph: QuantumGraph, params: GraphClassParams, y1: float, y2: float) -> tuple[float, float]:
    """Uniform bounds on |f'/f| along Im z = y1 and Im z = y2."""
    LQ = graph.total_length
    bottom = 2 * LQ + secular.log_derivative_series_bound(graph, complex(0, y1), params)
    top = secular.log_derivative_series_bound(graph, complex(0, y2), params)
    return bottom, top


def _check_lines(params: GraphClassParams, y1: float, y2: float) -> float:
    Y = bounds.strip_depth(params)
    if not y1 < Y:
        raise DomainError(f"bottom line y1={y1} must lie below the strip depth Y={Y}")
    if not y2 > 0:
        raise DomainError(f"top line y2={y2} must lie in the upper half plane")
    return Y


def truncation_for(g, graph, params, y1, y2, budget) -> float:
    """Smallest half-width T (on a 1/8 grid) whose line-tail bound is below ``budget``."""
    sb, st = _line_bounds(graph, params, y1, y2)
    T = 1.0
    while sb * g.tail_mass(y1, T) + st * g.tail_mass(y2, T) > budget:
        T += 0.125
        if T > 1e4:
            raise TruncationError("no truncation meets the budget")
    return T


def boundary_integral(
    graph: QuantumGraph,
    g,
    y1: float,
    y2: float,
    T: float,
    params: GraphClassParams | None = None,
    tol: float = 1e-10,
    tail_tol: float | None = None,
) -> BoundaryIntegral:
    """Right-hand side of the trace formula truncated to the window of half-width T.

    The returned ``tail_bound`` controls the omitted |x - x0| > T parts
    using |f'/f| <= bound(y2) on top and <= 2 L_Q + bound(y1) on the bottom.
    """
    params = params or GraphClassParams.of(graph)
    _check_lines(params, y1, y2)
    sb, st = _line_bounds(graph, params, y1, y2)
    tail = sb * g.tail_mass(y1, T) + st * g.tail_mass(y2, T)
    if tail_tol is not None and tail > tail_tol:
        raise TruncationError(f"tail bound {tail:.3g} exceeds {tail_tol:.3g}; raise T")
    lo, hi = g.window(T)
    width = hi - lo
    out = []
    err = 0.0
    for y, sup in ((y1, sb), (y2, st)):
        # rounding floor: the integrand can be far larger than its integral
        line_tol = max(tol, 16 * secular.EPS * sup * g.tail_mass(y, 0.0))
        # oscillation of g along the line has frequency 2 a |y - y_anchor|
        freq = graph.total_length / math.pi + 2 * g.a * abs(y - getattr(g, "y_anchor", 0.0)) / math.pi
        panels = int(min(20000, max(4, math.ceil(width * freq))))
        res = integrate_segment(
            lambda z: g(z) * secular.log_derivative(graph, z),
            complex(lo, y), complex(hi, y), tol=line_tol, initial_panels=panels,
        )
        out.append(res.value)
        err += max(res.error, line_tol) if line_tol > tol else res.error
    bottom, top = out
    return BoundaryIntegral(bottom - top, bottom, top, y1, y2, T, tail, err)


def top_line_bound(graph: QuantumGraph, g, y2: float, params: GraphClassParams | None = None) -> float:
    """|top-line integral| <= 2 L_Q q/(1-q) * int |g|, q = exp(-y2 Lmin)."""
    params = params or GraphClassParams.of(graph)
    return secular.log_derivative_series_bound(graph, complex(0, y2), params) * g.tail_mass(y2, 0.0)


@dataclass
class ResonanceSum:
    value: complex
    tail_bound: float
    half_width: float
    count: int


def _sum_tail(graph, g, params, W, N0) -> float:
    """2 pi * bound on sum |g| over resonances with |Re z - x0| > W (outside the window)."""
    Y = bounds.strip_depth(params)
    step = 1.0 / params.Lmin
    total = 0.0
    n = 0
    while True:
        term = 2 * N0 * g.sup_outside(W + n * step, Y, 0.0)
        total += term
        n += 1
        if term <= 1e-18 * max(total, 1e-300) or n > 10**6:
            break
    return 2 * math.pi * total


def window_for(graph, g, params, budget) -> float:
    N0 = bounds.jensen_N0(graph, params=params)
    W = 1.0
    while _sum_tail(graph, g, params, W, N0) > budget:
        W += 0.25
        if W > 1e4:
            raise TruncationError("no window meets the budget")
    return W


def resonance_sum(
    graph: QuantumGraph,
    g,
    resonances: ResonanceSet,
    params: GraphClassParams | None = None,
) -> ResonanceSum:
    """2 pi i sum g(z) m over located resonances, with a bound on the omitted tail.

    The tail covers resonances with |Re z - x0| beyond the inner half-width
    of the located region, counted N0 per vertical strip of width 1/Lmin.
    """
    params = params or GraphClassParams.of(graph)
    lo, hi = g.window(0.0)
    W = min(lo - resonances.region.x_lo, resonances.region.x_hi - hi)
    if W <= 0:
        raise ParameterError("located region does not cover the test function's centre")
    if resonances.entries:
        value = TWO_PI_I * complex(np.sum(g(resonances.points) * resonances.multiplicities))
    else:
        value = 0j
    N0 = bounds.jensen_N0(graph, params=params)
    return ResonanceSum(value, _sum_tail(graph, g, params, W, N0), W, resonances.total)


def default_lines(params: GraphClassParams, a: float) -> tuple[float, float]:
    """Bottom and top lines: offsets ln16/Lmin and ln32/Lmin from the strip, pulled in for sharp g."""
    Y = bounds.strip_depth(params)
    gp = bounds.gaussian_params(params)
    cap = 0.75 / math.sqrt(a)
    return Y - min(Y - gp.y1, cap), min(gp.y2, cap)


@dataclass
class TraceCheckReport:
    lhs: complex
    rhs: complex
    residual: float
    truncation_bound: float
    quadrature_error_estimate: float
    y1: float
    y2: float
    T: float
    half_width: float
    tol: float
    n_resonances: int
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = self.residual <= self.tol * max(1.0, abs(self.lhs))

    def to_text(self) -> str:
        rows = [
            ("lhs_re", self.lhs.real), ("lhs_im", self.lhs.imag),
            ("rhs_re", self.rhs.real), ("rhs_im", self.rhs.imag),
            ("residual", self.residual), ("truncation_bound", self.truncation_bound),
            ("quadrature_error_estimate", self.quadrature_error_estimate),
            ("y1", self.y1), ("y2", self.y2), ("T", self.T), ("half_width", self.half_width),
            ("tol", self.tol),
        ]
        out = [f"{k} = {v:.17g}" for k, v in rows]
        out += [f"n_resonances = {self.n_resonances}", f"passed = {self.passed}"]
        return "\n".join(out) + "\n"


def trace_check(
    graph: QuantumGraph,
    g,
    y1: float | None = None,
    y2: float | None = None,
    tol: float = 1e-6,
    params: GraphClassParams | None = None,
    resonances: ResonanceSet | None = None,
    finder_tol: float = 1e-11,
) -> TraceCheckReport:
    """Compare the resonance sum with the boundary integral for one test function.

    ``resonances`` may be supplied (e.g. shared between several test
    functions); it must cover the window needed for the tail budget.
    """
    params = secular.check_class(graph, params)
    dy1, dy2 = default_lines(params, g.a)
    y1 = dy1 if y1 is None else y1
    y2 = dy2 if y2 is None else y2
    budget = tol / 8
    T = truncation_for(g, graph, params, y1, y2, budget)
    rhs = boundary_integral(graph, g, y1, y2, T, params, tol=budget / 4, tail_tol=budget)
    W = window_for(graph, g, params, budget)
    lo, hi = g.window(W)
    if resonances is None or resonances.region.x_lo > lo or resonances.region.x_hi < hi:
        resonances = locate_in_strip(graph, lo, hi, tol=finder_tol, params=params)
    lhs = resonance_sum(graph, g, resonances, params)
    return TraceCheckReport(
        lhs=lhs.value, rhs=rhs.value, residual=abs(lhs.value - rhs.value),
        truncation_bound=rhs.tail_bound + lhs.tail_bound,
        quadrature_error_estimate=rhs.quad_error, y1=y1, y2=y2, T=T, half_width=lhs.half_width,
        tol=tol, n_resonances=lhs.count,
    )


def required_window(graph, g, tol: float = 1e-6, params: GraphClassParams | None = None) -> tuple[float, float]:
    """Real-part window a shared ResonanceSet must cover for :func:`trace_check`."""
    params = params or GraphClassParams.of(graph)
    return g.window(window_for(graph, g, params, tol / 8))


def integrand_samples_csv(graph: QuantumGraph, g, xs, y: float) -> str:
    """Samples of g(z) f'/f(z) along Im z = y, as ``x,re,im`` rows."""
    xs = np.asarray(xs, dtype=float)
    vals = g(xs + 1j * y) * secular.log_derivative(graph, xs + 1j * y)
    rows = ["x,re,im"] + [f"{x:.17g},{v.real:.17g},{v.imag:.17g}" for x, v in zip(xs, vals)]
    return "\n".join(rows) + "\n"


# ---------------------------------------------------------------- Weyl law


@dataclass
class WeylFit:
    R: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    intercept_band: float
    expected_slope: float

    @property
    def relative_error(self) -> float:
        return abs(self.slope - self.expected_slope) / self.expected_slope


def weyl_counts(graph: QuantumGraph, R_values, params: GraphClassParams | None = None,
                margin: float = 0.5) -> tuple[np.ndarray, np.ndarray]:
    """N(R) = number of resonances with |Re z| <= R, for increasing R.

    Counts come from winding integrals over [-R, R] x [Y - margin, margin];
    horizontal pieces are shared between consecutive R and a vertical side
    landing on a zero is nudged outward.  Returns the R actually used.
    """
    params = params or GraphClassParams.of(graph)
    Y = bounds.strip_depth(params)
    ylo, yhi = Y - margin, margin
    counter = ContourCounter(graph)
    R_used, counts = [], []
    horiz = 0j
    prev = 0.0
    for R in np.asarray(R_values, dtype=float):
        if R <= prev:
            raise ParameterError("R values must be positive and increasing")
        for k in range(20):
            Rk = R + (0.0 if k == 0 else 1e-3 * 2**k * (1 + _unit_hash(R, float(k))))
            try:
                vert = counter.edge(complex(Rk, ylo), complex(Rk, yhi)) + counter.edge(
                    complex(-Rk, yhi), complex(-Rk, ylo))
                break
            except BoundaryProximityError:
                continue
        else:
            raise BoundaryProximityError(f"could not place a vertical side near R={R}")
        # bottom runs left to right, top right to left
        piece = (
            counter.edge(complex(prev, ylo), complex(Rk, ylo))
            + counter.edge(complex(-Rk, ylo), complex(-prev, ylo))
            + counter.edge(complex(Rk, yhi), complex(prev, yhi))
            + counter.edge(complex(-prev, yhi), complex(-Rk, yhi))
        )
        horiz += piece
        w = (horiz + vert) / TWO_PI_I
        n = round(w.real)
        if abs(w - n) > 0.25:
            raise BoundaryProximityError(f"winding count {w} at R={Rk} not integral")
        R_used.append(Rk)
        counts.append(n)
        prev = Rk
    return np.array(R_used), np.array(counts)


def weyl_fit(graph: QuantumGraph, R_values, params: GraphClassParams | None = None) -> WeylFit:
    """Least-squares slope of N(R) against R, compared with 2 L_Q / pi."""
    R, N = weyl_counts(graph, R_values, params)
    slope, intercept = np.polyfit(R, N, 1)
    band = float(np.max(np.abs(N - (slope * R + intercept))))
    return WeylFit(R, N, float(slope), float(intercept), band, 2 * graph.total_length / math.pi)
