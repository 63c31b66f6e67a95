import cmath
import math

import numpy as np
import pytest

from qgres import secular
from qgres.generators import generate
from qgres.graph import GraphClassParams
from qgres.secular import DomainError

from conftest import closed_interval, interval, lollipop, loop_and_parallel, path, random_small_graph, star

GRAPHS = [interval(), closed_interval(1.3), star(), loop_and_parallel(), lollipop(), path(4, (1.0, 1.5), 2),
          generate("cycle_with_leads", 5), generate("random_regular_with_leads", 8, length=(1.0, 2.0), seed=3)]


def test_scattering_entries():
    S = secular.build_S(interval())
    # bond 0 leaves vertex 0 (no leads): perfect reflection; bond 1 leaves vertex 1 (2 leads)
    assert S[0, 1] == 1.0 and math.isclose(S[1, 0], -1 / 3)
    assert np.allclose(S, [[0, 1], [-1 / 3, 0]])
    S3 = secular.build_S(star(3, centre_leads=0))
    # bond 2k runs centre -> tip k; reverse bonds 2k+1 arrive at the centre
    assert math.isclose(S3[0, 1], -1 / 3) and math.isclose(S3[0, 3], 2 / 3) and math.isclose(S3[0, 5], 2 / 3)
    assert S3[0, 0] == 0 and S3[0, 2] == 0


def test_closed_graph_unitary():
    for g in (closed_interval(1.7), generate("cycle_with_leads", 4, leads=0), generate(
            "random_regular_with_leads", 6, leads=0, length=(1.0, 2.0), seed=1)):
        for x in np.linspace(-7, 7, 9):
            U = secular.build_U(g, x)
            assert np.linalg.norm(U.conj().T @ U - np.eye(len(U))) <= 1e-12


def test_U_at_zero_and_norm_bounds():
    rng = np.random.default_rng(0)
    for g in GRAPHS:
        p = GraphClassParams.of(g)
        assert np.array_equal(secular.build_U(g, 0.0), secular.build_S(g))
        for _ in range(20):
            z = complex(rng.uniform(-10, 10), rng.uniform(-3, 3))
            n = np.linalg.norm(secular.build_U(g, z), 2)
            bound = math.exp(-z.imag * p.Lmin) if z.imag > 0 else math.exp(-z.imag * p.Lmax)
            assert n <= bound * (1 + 1e-12)


def test_inverse_norm_bound():
    rng = np.random.default_rng(1)
    for g in GRAPHS:
        p = GraphClassParams.of(g)
        for _ in range(20):
            z = complex(rng.uniform(-10, 10), rng.uniform(-3, -0.01))
            Uinv = np.linalg.inv(secular.build_U(g, z))
            assert np.linalg.norm(Uinv, 2) <= (p.n0 + p.D) * math.exp(z.imag * p.Lmin) * (1 + 1e-12)


def test_interval_closed_form():
    g = interval()
    rng = np.random.default_rng(2)
    for _ in range(20):
        z = complex(rng.uniform(-10, 10), rng.uniform(-2, 2))
        ev = secular.evaluate(g, z)
        f = 1 + cmath.exp(2j * z) / 3
        assert abs(ev.f - f) <= 1e-13 * max(1, abs(f))
        assert math.isclose(ev.log_abs_f, math.log(abs(f)), rel_tol=1e-12, abs_tol=1e-13)
        assert abs(ev.fprime_over_f - (2j / 3) * cmath.exp(2j * z) / f) <= 1e-12 * max(1, abs(ev.fprime_over_f))


def test_zero_flag():
    ev = secular.evaluate(closed_interval(), 0.0)
    assert ev.is_zero and ev.f == 0 and math.isinf(ev.fprime_over_f.real)
    ev = secular.evaluate(interval(), complex(math.pi / 2, -math.log(3) / 2))
    assert ev.is_zero or abs(ev.f) < 1e-14


def test_far_above_axis():
    for g in GRAPHS:
        p = GraphClassParams.of(g)
        f = secular.evaluate(g, complex(0.3, 10)).f
        assert abs(f - 1) <= g.n_bonds * math.exp(-10 * p.Lmin) * 1.01


def test_reflection_symmetry():
    rng = np.random.default_rng(3)
    for g in GRAPHS:
        for _ in range(20):
            z = complex(rng.uniform(-10, 10), rng.uniform(-2, 1))
            a, b = secular.evaluate(g, z).f, secular.evaluate(g, -z.conjugate()).f
            assert abs(b - a.conjugate()) <= 1e-12 * max(1, abs(a))


def test_large_negative_imag_no_overflow():
    g = generate("random_regular_with_leads", 8, length=(1.0, 2.0), seed=3)
    ev = secular.evaluate(g, complex(0.5, -400))
    assert math.isfinite(ev.log_abs_f) and ev.log_abs_f > 700
    assert cmath.isfinite(ev.fprime_over_f)


def test_derivative_matches_finite_differences():
    rng = np.random.default_rng(4)
    h = 1e-5
    for g in GRAPHS:
        n = 0
        while n < 100:
            z = complex(rng.uniform(-8, 8), rng.uniform(-2, 1))
            ev = secular.evaluate(g, z)
            if ev.log_abs_f < -3:
                continue  # stay away from zeros
            _, lp = secular.log_abs_det(g, [z + h, z - h, z + 1j * h, z - 1j * h])
            # d log|f|/dx = Re f'/f, d log|f|/dy = -Im f'/f
            dx = (lp[0] - lp[1]) / (2 * h)
            dy = (lp[2] - lp[3]) / (2 * h)
            fd = complex(dx, -dy)
            assert abs(fd - ev.fprime_over_f) <= 1e-6 * max(1, abs(ev.fprime_over_f))
            n += 1


def test_batched_matches_pointwise():
    rng = np.random.default_rng(5)
    for g in GRAPHS:
        zs = rng.uniform(-8, 8, 40) + 1j * rng.uniform(-2, 1, 40)
        batch = secular.log_derivative(g, zs)
        single = np.array([secular.evaluate(g, z).fprime_over_f for z in zs])
        assert np.allclose(batch, single, rtol=1e-10, atol=1e-12)
        f = secular.secular_det(g, zs)
        assert np.allclose(f, [secular.evaluate(g, z).f for z in zs], rtol=1e-10, atol=1e-14)


def test_neumann_series_matches_direct():
    rng = np.random.default_rng(6)
    for g in GRAPHS:
        for _ in range(10):
            z = complex(rng.uniform(-8, 8), rng.uniform(0.5, 3))
            d = secular.evaluate(g, z).fprime_over_f
            assert abs(secular.log_derivative_neumann(g, z) - d) <= 1e-9 * max(abs(d), 1e-12)
    with pytest.raises(DomainError):
        secular.log_derivative_neumann(interval(), -0.5j)


def test_inverse_series_matches_direct():
    rng = np.random.default_rng(7)
    for g in GRAPHS:
        p = GraphClassParams.of(g)
        Y = secular.strip_depth_float(p)
        for _ in range(10):
            z = complex(rng.uniform(-8, 8), Y - rng.uniform(0.3, 2))
            d = secular.evaluate(g, z).fprime_over_f
            s = secular.log_derivative_inverse_series(g, z, p)
            assert abs(s - d) <= 1e-9 * abs(d)
    with pytest.raises(DomainError):
        secular.log_derivative_inverse_series(interval(), -0.1j)


def test_series_bounds():
    for g in GRAPHS:
        p = GraphClassParams.of(g)
        Y = secular.strip_depth_float(p)
        LQ = g.total_length
        xs = np.linspace(-10, 10, 101)
        for y in (0.2, 1.0, 3.0):
            b = secular.log_derivative_series_bound(g, complex(0, y), p)
            assert np.abs(secular.log_derivative(g, xs + 1j * y)).max() <= b
        for dy in (0.2, 1.0, 3.0):
            y = Y - dy
            b = secular.log_derivative_series_bound(g, complex(0, y), p)
            assert np.abs(secular.log_derivative(g, xs + 1j * y) - 2j * LQ).max() <= b
    p = GraphClassParams.of(interval())
    assert secular.log_derivative_series_bound(interval(), 60j, p) < 1e-20
    assert secular.log_derivative_series_bound(interval(), -60j, p) < 1e-20
    with pytest.raises(DomainError):
        secular.log_derivative_series_bound(interval(), complex(0, -0.2), p)


def test_interval_bound_below_strip():
    g = interval()
    p = GraphClassParams.of(g)
    y = secular.strip_depth_float(p) - 1
    z = complex(0.7, y)
    direct = abs(secular.evaluate(g, z).fprime_over_f - 2j)
    q = math.exp(-1.0)
    assert math.isclose(secular.log_derivative_series_bound(g, z, p), 2 * q / (1 - q), rel_tol=1e-14)
    assert direct < 2 * q / (1 - q)


def test_banded_path_matches_dense():
    rng = np.random.default_rng(8)
    for g in (generate("cycle_with_leads", 40), path(60, (1.0, 2.0), 3),
              generate("cycle_with_leads", 33, leads=3, length=(0.5, 1.5), seed=2)):
        assert secular._band_plan(g) is not None
        Y = secular._tight_depth(g)
        for y in (0.05, 0.8, Y - 0.05, Y - 1.0):
            zs = rng.uniform(-5, 5, 40) + 1j * y
            side = "upper" if y > 0 else "lower"
            band = secular.log_derivative_banded(g, zs, side)
            dense = np.array([secular.evaluate(g, z).fprime_over_f for z in zs])
            assert np.allclose(band, dense, rtol=1e-11, atol=1e-11)


def test_diagonal_entries_sum():
    rng = np.random.default_rng(9)
    for g in GRAPHS:
        for _ in range(10):
            z = complex(rng.uniform(-5, 5), rng.uniform(-2, 1))
            F = secular.diagonal_entries(g, z)
            assert abs(F.sum() + secular.evaluate(g, z).fprime_over_f) <= 1e-10 * max(1, abs(F.sum()))


def test_matrix_dump_format():
    text = secular.dump_matrix_csv(secular.build_U(interval(), 0.5))
    rows = text.strip().split("\n")
    assert len(rows) == 2 and all(len(r.split(",")) == 4 for r in rows)
    assert complex(float(rows[0].split(",")[2]), float(rows[0].split(",")[3])) == secular.build_U(interval(), 0.5)[0, 1]


def test_random_graphs_reflection_and_fd():
    rng = np.random.default_rng(10)
    for _ in range(20):
        g = random_small_graph(rng)
        z = complex(rng.uniform(-5, 5), rng.uniform(-1, 1))
        a = secular.evaluate(g, z)
        b = secular.evaluate(g, -z.conjugate())
        assert abs(b.f - a.f.conjugate()) <= 1e-12 * max(1, abs(a.f))


def test_deep_points_batched_and_scaled():
    g = generate("random_regular_with_leads", 8, length=(1.0, 2.0), seed=3)
    zs = np.linspace(-5, 5, 30) + 1j * np.linspace(-60, 1, 30)
    batch = secular.log_derivative(g, zs)
    single = np.array([secular.evaluate(g, z).fprime_over_f for z in zs])
    assert np.allclose(batch, single, rtol=1e-12)
    # deep below the strip f'/f approaches 2i L_Q
    assert abs(batch[0] - 2j * g.total_length) < 1e-12 * g.total_length
    sign, la = secular.log_abs_det(g, zs[:3])
    assert np.all(np.isfinite(la)) and np.allclose(np.abs(sign), 1)
