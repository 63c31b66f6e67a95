"""One pass/fail line per primary acceptance criterion, printed in the terminal summary."""

import math
from functools import lru_cache

import numpy as np
import pytest

from qgres.bounds import (
    alpha_threshold,
    gaussian_params,
    guaranteed_count,
    jensen_N0,
    strip_counts,
    strip_depth,
    verify_lower_bound,
)
from qgres.bs import convergence_experiment, cycle_family, mid_strip_gaussian, path_family, spectral_pairing
from qgres.finder import BoundaryProximityError, ContourCounter, Rectangle, locate_in_strip, locate_resonances
from qgres.generators import generate
from qgres.graph import GraphClassParams
from qgres.trace import GaussianTest, required_window, trace_check, weyl_fit

from conftest import ACCEPTANCE_LINES, Z_INTERVAL, interval, lollipop, loop_and_parallel, path, random_small_graph, star


def record(name, ok, detail):
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    assert ok, detail


GRAPHS = {
    "interval": lambda: interval(),
    "interval_1.7": lambda: interval(1.7),
    "cycle3": lambda: generate("cycle_with_leads", 3, leads=1, length=1.0),
    "cycle5_l3": lambda: generate("cycle_with_leads", 5, leads=3, length=(0.8, 1.3), seed=2),
    "cycle10": lambda: generate("cycle_with_leads", 10, leads=1, length=1.0),
    "path4": lambda: path(4, length=(1.0, 1.6), seed=5),
    "star3": lambda: star(),
    "lollipop": lollipop,
    "loop_parallel": loop_and_parallel,
    "rr6": lambda: generate("random_regular_with_leads", 6, leads=1, length=(1.0, 1.5), seed=3),
    "rr20": lambda: generate("random_regular_with_leads", 20, leads=1, length=(1.0, 2.0), seed=7),
}


@lru_cache(maxsize=None)
def graph(name):
    return GRAPHS[name]()


def gaussians(name):
    Y = strip_depth(GraphClassParams.of(graph(name)))
    return [GaussianTest(1.0, 0.0), GaussianTest(0.5, 3.0), GaussianTest(2.0, -1.5, Y / 2)]


@lru_cache(maxsize=None)
def strip_set(name, half_width):
    return locate_in_strip(graph(name), -half_width, half_width, tol=1e-11)


def test_worked_example_constants():
    p = GraphClassParams(D=4, n0=1, Lmin=1.0, Lmax=2.0)
    Y, a = strip_depth(p), gaussian_params(p).a
    count, alpha = guaranteed_count(p), alpha_threshold(p)
    ok = (abs(Y + math.log(5)) <= 1e-12 and abs(a - 9.5e-3) <= 0.05e-3
          and abs(count - 2.3) <= 0.05 and abs(alpha - 26.7) <= 0.1)
    record("worked-example constants", ok,
           f"Y={Y:.12f} a={a:.7f} count={count:.5f} alpha/Lmin={alpha:.4f}")


def test_interval_oracle():
    g = interval()
    rs = locate_resonances(g, Rectangle(0.1, 31.0, -2.0, 0.5), tol=1e-12)
    pts = sorted(rs.points, key=lambda z: z.real)
    err = max(abs(z - w) for z, w in zip(pts, Z_INTERVAL)) if len(pts) == 10 else math.inf
    ok = len(pts) == 10 and err <= 1e-10 and all(rs.multiplicities == 1)
    record("interval resonance oracle", ok, f"{len(pts)} zeros, max error {err:.2e}")


@pytest.mark.slow
def test_trace_identity():
    worst, n_checks, failures = 0.0, 0, []
    for name in GRAPHS:
        gs = gaussians(name)
        p = GraphClassParams.of(graph(name))
        half = max(max(abs(x) for x in required_window(graph(name), g, 1e-6, p)) for g in gs) + 0.5
        rs = strip_set(name, math.ceil(half))
        for g in gs:
            rep = trace_check(graph(name), g, tol=1e-6, resonances=rs)
            rel = rep.residual / max(1.0, abs(rep.lhs))
            worst = max(worst, rel)
            n_checks += 1
            if not rep.passed:
                failures.append(f"{name} a={g.a}")
    ok = not failures and n_checks >= 30 and "rr20" in GRAPHS
    record("trace identity", ok,
           f"{len(GRAPHS)} graphs x 3 Gaussians, worst relative residual {worst:.2e}"
           + (f", failed: {failures}" if failures else ""))


def test_strip_containment():
    rng = np.random.default_rng(2024)
    violations, total, graphs = 0, 0, 0
    while graphs < 60:
        g = random_small_graph(rng)
        p = GraphClassParams.of(g)
        Y = strip_depth(p)
        x0 = float(rng.uniform(-5, 5))
        # a box reaching well beyond the strip on both sides
        rect = Rectangle(x0 - 6 + 1e-3 * rng.random(), x0 + 6 + 1e-3 * rng.random(),
                         Y - 1.0 - 1e-3 * rng.random(), 1.0 + 1e-3 * rng.random())
        try:
            rs = locate_resonances(g, rect, tol=1e-11)
        except BoundaryProximityError:
            continue
        graphs += 1
        total += rs.total
        violations += sum(m for z, m in rs.entries if not (Y - 1e-8 <= z.imag <= 1e-8))
    record("strip containment", violations == 0,
           f"{graphs} random graphs, {total} resonances, {violations} outside [Y, 0]")


@pytest.mark.slow
def test_weyl_slope():
    names = ["interval", "cycle3", "path4", "star3", "lollipop"]
    R = np.linspace(10, 100, 91)
    errs = {n: weyl_fit(graph(n), R).relative_error for n in names}
    worst = max(errs.values())
    record("Weyl slope", worst <= 0.02,
           f"{len(names)} graphs, worst relative slope error {worst:.4f} at R_max=100")


@pytest.mark.slow
def test_lower_bound():
    names = ["interval", "cycle3", "cycle10", "path4", "star3", "lollipop", "loop_parallel", "rr6"]
    x0s = np.linspace(-20, 20, 20)
    checked, failures, margin = 0, [], math.inf
    for name in names:
        g = graph(name)
        p = GraphClassParams.of(g)
        half = alpha_threshold(p)
        rs = strip_set(name, math.ceil(20 + half + 1))
        for x0 in x0s:
            cert = verify_lower_bound(g, p, float(x0), resonances=rs)
            checked += 1
            margin = min(margin, cert.observed_count / cert.guaranteed_count)
            if not (cert.verdict and cert.in_class):
                failures.append(f"{name}@{x0:.2f}")
    record("lower-bound proposition", not failures,
           f"{len(names)} graphs x 20 x0 = {checked} certificates, min observed/guaranteed {margin:.2f}"
           + (f", failed: {failures}" if failures else ""))


@pytest.mark.slow
def test_jensen_domination():
    worst, checked = 0.0, 0
    for name in GRAPHS:
        g = graph(name)
        p = GraphClassParams.of(g)
        rs = strip_set(name, 12)
        starts = np.linspace(-10, 10 - 1 / p.Lmin, 50)
        counts = strip_counts(rs, 1 / p.Lmin, starts)
        worst = max(worst, counts.max() / jensen_N0(g))
        checked += 1
    record("Jensen domination", worst <= 1.0,
           f"{checked} graphs x 50 strips, max count / N0 = {worst:.3f}")


def test_finder_self_consistency():
    rng = np.random.default_rng(11)
    pool = [random_small_graph(rng) for _ in range(20)]
    mismatches, pairs, resonances = 0, 0, 0
    while pairs < 200:
        g = pool[pairs % len(pool)]
        Y = strip_depth(GraphClassParams.of(g))
        x_lo = float(rng.uniform(-8, 6))
        y_lo = float(rng.uniform(Y - 0.5, Y / 2))
        rect = Rectangle(x_lo, x_lo + float(rng.uniform(0.5, 4)), y_lo, float(rng.uniform(Y / 2, 0.5)))
        try:
            n = ContourCounter(g).count(rect)
            rs = locate_resonances(g, rect, tol=1e-10)
        except BoundaryProximityError:
            continue
        pairs += 1
        resonances += rs.total
        mismatches += rs.total != n
    record("finder self-consistency", mismatches == 0,
           f"{pairs} (graph, rectangle) pairs, {resonances} resonances, {mismatches} mismatches")


@pytest.mark.slow
def test_bs_convergence():
    p = GraphClassParams.of(cycle_family()(4))
    g = mid_strip_gaussian(p, 6.0, 0.3)
    table = convergence_experiment(cycle_family(), [4, 8, 16, 32, 64], g)
    d = table.diffs
    cyc = spectral_pairing(cycle_family()(256), g).value
    pth = spectral_pairing(path_family()(256), g).value
    gap = abs(cyc - pth)
    ok = table.monotone() and len(d) == 4 and d[-1] < 1e-3 and gap < 1e-2
    record("BS convergence", ok,
           "cycle diffs " + ", ".join(f"{x:.2e}" for x in d) + f"; cycle vs path at N=256 differ by {gap:.4f}")
