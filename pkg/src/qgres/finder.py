"""Resonance location by argument-principle counts and recursive subdivision.

The count of zeros of f inside a rectangle is (1/2 pi i) times the
counterclockwise contour integral of f'/f, computed edge by edge with
adaptive Gauss-Legendre quadrature.  Boxes are subdivided until each holds
a single zero (then Newton on f'/f) or shrinks below the tolerance
(reported as a cluster whose multiplicity is its winding count).
"""

from __future__ import annotations

import cmath
import hashlib
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from . import secular
from .graph import GraphClassParams, QuantumGraph
from .quadrature import QuadratureError, integrate_segment

TWO_PI_I = 2j * math.pi


class FinderError(RuntimeError):
    pass


class BoundaryProximityError(FinderError):
    """A zero of f lies on or too close to the contour."""


class ResolutionError(FinderError):
    """The winding integral could not be resolved to an integer."""


class BudgetExhausted(FinderError):
    """Box budget ran out; ``partial`` holds the entries found so far."""

    def __init__(self, msg, partial):
        super().__init__(msg)
        self.partial = partial


@dataclass(frozen=True)
class Rectangle:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def width(self) -> float:
        return self.x_hi - self.x_lo

    @property
    def height(self) -> float:
        return self.y_hi - self.y_lo

    @property
    def diameter(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def center(self) -> complex:
        return complex((self.x_lo + self.x_hi) / 2, (self.y_lo + self.y_hi) / 2)

    def contains(self, z: complex, pad: float = 0.0) -> bool:
        return (
            self.x_lo - pad <= z.real <= self.x_hi + pad
            and self.y_lo - pad <= z.imag <= self.y_hi + pad
        )

    def corners(self) -> tuple[complex, complex, complex, complex]:
        """Counterclockwise from the lower-left corner."""
        return (
            complex(self.x_lo, self.y_lo),
            complex(self.x_hi, self.y_lo),
            complex(self.x_hi, self.y_hi),
            complex(self.x_lo, self.y_hi),
        )

    def shifted(self, dx: float) -> "Rectangle":
        return Rectangle(self.x_lo + dx, self.x_hi + dx, self.y_lo, self.y_hi)


@dataclass
class ResonanceSet:
    entries: list[tuple[complex, int]]
    region: Rectangle
    residuals: list[float] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def points(self) -> np.ndarray:
        return np.array([z for z, _ in self.entries], dtype=complex)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.entries], dtype=int)

    def expanded(self) -> np.ndarray:
        """Locations repeated according to multiplicity."""
        return np.repeat(self.points, self.multiplicities) if self.entries else np.zeros(0, complex)

    def to_csv(self) -> str:
        rows = ["re,im,multiplicity,abs_f_residual"]
        for (z, m), r in zip(self.entries, self.residuals):
            rows.append(f"{z.real:.17g},{z.imag:.17g},{m},{r:.17g}")
        return "\n".join(rows) + "\n"


def _unit_hash(*values: float) -> float:
    """Deterministic pseudo-random number in [-1, 1) from float inputs."""
    h = hashlib.blake2b(struct.pack(f"{len(values)}d", *values), digest_size=8).digest()
    return int.from_bytes(h, "little") / 2**63 - 1.0


class ContourCounter:
    """Winding counts for one graph with a cache of oriented edge integrals."""

    def __init__(self, graph: QuantumGraph, edge_tol: float = 0.1, proximity: float = 1e-7):
        self.graph = graph
        self.edge_tol = edge_tol
        self.proximity = proximity
        self.n_evals = 0
        self._cache: dict[tuple[complex, complex], complex] = {}
        LQ = max(graph.total_length, 1e-12)
        self._panels_per_unit = 0.25 * max(LQ, 1.0) / math.pi

    def _fpf(self, zs):
        return secular.log_derivative(self.graph, zs)

    def edge(self, za: complex, zb: complex) -> complex:
        """Integral of f'/f from ``za`` to ``zb``; raises on near-contour zeros."""
        key = (za, zb)
        if key in self._cache:
            return self._cache[key]
        if (zb, za) in self._cache:
            return -self._cache[(zb, za)]
        length = abs(zb - za)
        panels = int(min(4000, max(1, math.ceil(length * self._panels_per_unit))))
        try:
            res = integrate_segment(self._fpf, za, zb, tol=self.edge_tol, initial_panels=panels)
        except QuadratureError as exc:
            raise BoundaryProximityError(f"zero on or near segment {za} -> {zb}: {exc}") from exc
        self.n_evals += res.n_evals
        if res.max_abs > 0 and 1.0 / res.max_abs < self.proximity * length:
            raise BoundaryProximityError(f"zero within {1/res.max_abs:.3g} of segment {za} -> {zb}")
        self._cache[key] = res.value
        return res.value

    def raw(self, rect: Rectangle) -> complex:
        c = rect.corners()
        total = sum(self.edge(c[k], c[(k + 1) % 4]) for k in range(4))
        return total / TWO_PI_I

    def count(self, rect: Rectangle) -> int:
        w = self.raw(rect)
        m = round(w.real)
        if abs(w - m) > 0.25 or m < 0:
            # tighten the edges of this box once before giving up
            c = rect.corners()
            old_tol = self.edge_tol
            self.edge_tol = old_tol / 100
            try:
                for k in range(4):
                    self._cache.pop((c[k], c[(k + 1) % 4]), None)
                    self._cache.pop((c[(k + 1) % 4], c[k]), None)
                w = self.raw(rect)
            finally:
                self.edge_tol = old_tol
            m = round(w.real)
            if abs(w - m) > 0.25 or m < 0:
                raise ResolutionError(f"winding integral {w} does not resolve to an integer on {rect}")
        return int(m)


def winding_count(graph: QuantumGraph, rect: Rectangle, counter: ContourCounter | None = None) -> int:
    """Number of zeros of f inside ``rect``, counted with multiplicity."""
    return (counter or ContourCounter(graph)).count(rect)


def _newton(graph, z, rect: Rectangle, mult: int, tol: float, max_iter: int = 60):
    """Newton iteration z <- z - m / (f'/f); returns a point inside ``rect`` or None."""
    for _ in range(max_iter):
        ev = secular.evaluate(graph, z)
        if ev.is_zero:
            return z
        d = ev.fprime_over_f
        if d == 0 or not cmath.isfinite(d):
            return None
        step = mult / d
        z = z - step
        if not rect.contains(z, pad=0.0):
            return None
        if abs(step) <= tol:
            # one more step is cheap and nearly exact once quadratic convergence kicks in
            ev = secular.evaluate(graph, z)
            if not ev.is_zero and cmath.isfinite(ev.fprime_over_f) and ev.fprime_over_f != 0:
                z2 = z - mult / ev.fprime_over_f
                if rect.contains(z2) and abs(z2 - z) <= abs(step):
                    z = z2
            return z
    return None


def _split(rect: Rectangle, salt: int) -> list[Rectangle]:
    """Quadrisection with lines jittered by up to 1% of the box size.

    A side more than twice as long as the other is the only one cut.
    """
    jx = _unit_hash(rect.x_lo, rect.x_hi, rect.y_lo, rect.y_hi, float(salt))
    jy = _unit_hash(rect.y_lo, rect.y_hi, rect.x_lo, rect.x_hi, float(salt) + 0.5)
    xm = (rect.x_lo + rect.x_hi) / 2 + 0.01 * rect.width * jx
    ym = (rect.y_lo + rect.y_hi) / 2 + 0.01 * rect.height * jy
    if rect.width > 2 * rect.height:
        return [Rectangle(rect.x_lo, xm, rect.y_lo, rect.y_hi), Rectangle(xm, rect.x_hi, rect.y_lo, rect.y_hi)]
    if rect.height > 2 * rect.width:
        return [Rectangle(rect.x_lo, rect.x_hi, rect.y_lo, ym), Rectangle(rect.x_lo, rect.x_hi, ym, rect.y_hi)]
    return [
        Rectangle(rect.x_lo, xm, rect.y_lo, ym),
        Rectangle(xm, rect.x_hi, rect.y_lo, ym),
        Rectangle(rect.x_lo, xm, ym, rect.y_hi),
        Rectangle(xm, rect.x_hi, ym, rect.y_hi),
    ]


def locate_resonances(
    graph: QuantumGraph,
    rect: Rectangle,
    tol: float = 1e-10,
    max_boxes: int = 200000,
    counter: ContourCounter | None = None,
) -> ResonanceSet:
    """All zeros of f in ``rect`` with multiplicities.

    Raises :class:`BoundaryProximityError` if a zero sits on the outer
    contour (perturb the rectangle and retry) and :class:`BudgetExhausted`
    with partial results when ``max_boxes`` is exceeded.
    """
    tol = max(tol, 1e3 * secular.EPS)
    counter = counter or ContourCounter(graph)
    found: list[tuple[complex, int]] = []
    stack = [(rect, counter.count(rect))]
    boxes = 0
    cluster_size = max(tol, 1e-12)
    while stack:
        box, m = stack.pop()
        if m == 0:
            continue
        boxes += 1
        if boxes > max_boxes:
            raise BudgetExhausted(f"more than {max_boxes} boxes", _finish(graph, found, rect))
        if m <= MULTISTART_MAX and box.diameter >= 1e-3:
            zs = _multistart(graph, box, m, tol)
            if zs is not None:
                found.extend((z, 1) for z in zs)
                continue
        if m == 1 or box.diameter < 1e-3:
            z = _newton(graph, box.center, box, m, tol)
            if z is not None and (m == 1 or _confirm_cluster(counter, box, z, m, tol)):
                found.append((z, m))
                continue
        if box.diameter < cluster_size:
            found.append((box.center, m))
            continue
        stack.extend(_subdivide(counter, box, m))
    return _finish(graph, found, rect)


MULTISTART_MAX = 8


def _multistart(graph: QuantumGraph, box: Rectangle, m: int, tol: float, max_iter: int = 40):
    """Find the ``m`` zeros of a box by deflated Newton from a grid of starts.

    Starts run in lock-step with f'/f - sum 1/(z - z_j) over zeros already
    found.  Returns None unless exactly ``m`` well-separated simple zeros
    are found inside the box.
    """
    sep = max(1e3 * tol, 1e-7)
    k = 4 * m + 2
    nx = max(1, round(math.sqrt(k * box.width / box.height)))
    ny = max(1, math.ceil(k / nx))
    xs = box.x_lo + box.width * (np.arange(nx) + 0.5) / nx
    ys = box.y_lo + box.height * (np.arange(ny) + 0.5) / ny
    z = (xs[None, :] + 1j * ys[:, None]).ravel()
    known: list[complex] = []
    for _ in range(max_iter):
        if not len(z):
            break
        d = secular.log_derivative(graph, z)
        for zj in known:
            d = d - 1.0 / (z - zj)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(np.isfinite(d), 1.0 / d, 0.0)
        z = z - step
        inside = (
            (z.real >= box.x_lo) & (z.real <= box.x_hi) & (z.imag >= box.y_lo) & (z.imag <= box.y_hi)
        )
        px, py = 0.25 * box.width, 0.25 * box.height
        near = (
            (z.real >= box.x_lo - px) & (z.real <= box.x_hi + px)
            & (z.imag >= box.y_lo - py) & (z.imag <= box.y_hi + py) & np.isfinite(z)
        )
        done = near & (np.abs(step) <= tol)
        for zc in z[done & inside]:
            if all(abs(zc - zj) > sep for zj in known):
                known.append(complex(zc))
        if len(known) >= m:
            break
        keep = near & ~done
        z = z[keep]
        # drop starts that collapsed onto each other
        if len(z) > 1:
            _, idx = np.unique(np.round(z / sep), return_index=True)
            z = z[np.sort(idx)]
    if len(known) != m:
        return None
    out = []
    for zj in known:
        zp = _newton(graph, zj, box, 1, tol)
        if zp is None or any(abs(zp - zo) <= sep for zo in out):
            return None
        out.append(zp)
    return out


def _subdivide(counter: ContourCounter, box: Rectangle, m: int) -> list[tuple[Rectangle, int]]:
    last = None
    for salt in range(8):
        kids = _split(box, salt)
        try:
            counts = [counter.count(k) for k in kids]
        except (BoundaryProximityError, ResolutionError) as exc:
            last = exc
            continue
        if sum(counts) == m:
            return list(zip(kids, counts))
        last = ResolutionError(f"children of {box} count {counts}, parent {m}")
    raise ResolutionError(f"could not subdivide {box}: {last}")


def _confirm_cluster(counter: ContourCounter, box: Rectangle, z: complex, m: int, tol: float) -> bool:
    h = max(100 * tol, 1e-9)
    sq = Rectangle(z.real - h, z.real + h, z.imag - h, z.imag + h)
    if not (box.contains(complex(sq.x_lo, sq.y_lo)) and box.contains(complex(sq.x_hi, sq.y_hi))):
        return False
    try:
        return counter.count(sq) == m
    except (BoundaryProximityError, ResolutionError):
        return False


def _finish(graph: QuantumGraph, found, rect: Rectangle) -> ResonanceSet:
    found = sorted(found, key=lambda e: (e[0].real, e[0].imag))
    residuals = []
    for z, _ in found:
        _, la = secular.log_abs_det(graph, np.array([z]))
        residuals.append(float(np.exp(la[0])))
    return ResonanceSet(found, rect, residuals)


def strip_region(params: GraphClassParams, x_lo: float, x_hi: float, margin: float) -> Rectangle:
    """[x_lo, x_hi] x [Y - margin, margin]: holds every resonance with real part in range."""
    from .bounds import strip_depth

    return Rectangle(x_lo, x_hi, strip_depth(params) - margin, margin)


def locate_in_strip(
    graph: QuantumGraph,
    x_lo: float,
    x_hi: float,
    tol: float = 1e-10,
    params: GraphClassParams | None = None,
    margin: float = 0.25,
    max_shifts: int = 12,
) -> ResonanceSet:
    """Locate resonances with x_lo <~ Re z <~ x_hi, nudging vertical sides off zeros.

    The left and right sides are moved outward by small deterministic
    amounts until the contour avoids every zero; the returned region records
    the sides actually used.
    """
    params = params or GraphClassParams.of(graph)
    base = strip_region(params, x_lo, x_hi, margin)
    counter = ContourCounter(graph)
    last = None
    for k in range(max_shifts):
        dl = 0.0 if k == 0 else 1e-3 * (1 + _unit_hash(x_lo, float(k))) * 2**k
        dr = 0.0 if k == 0 else 1e-3 * (1 + _unit_hash(x_hi, float(k) + 0.25)) * 2**k
        rect = Rectangle(base.x_lo - dl, base.x_hi + dr, base.y_lo, base.y_hi)
        try:
            return locate_resonances(graph, rect, tol=tol, counter=counter)
        except BoundaryProximityError as exc:
            last = exc
    raise BoundaryProximityError(f"could not place strip sides away from zeros: {last}")
