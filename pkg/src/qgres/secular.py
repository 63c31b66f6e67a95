"""Secular determinant f(z) = det(Id - U(z)) and its logarithmic derivative.

U(z) = S D(z) with S the real bond scattering matrix built from the
Kirchhoff vertex coefficients and D(z) = diag(exp(i z L_b)).  Resonances
are the zeros of f, with multiplicity equal to the order of the zero.

|f| is doubly exponential in -Im z, so determinants are carried as
(log|f|, phase) pairs from an LU factorization; f'/f is obtained from
linear solves against the same factorization.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .graph import GraphClassParams, ParameterError, QuantumGraph

EPS = np.finfo(float).eps
# bytes of complex scratch allowed per batched solve
_BATCH_BYTES = 64 * 2**20


class DomainError(ValueError):
    """Point outside the region where a requested bound or expansion holds."""


@dataclass(frozen=True)
class SecularEvaluation:
    z: complex
    f: complex
    log_abs_f: float
    fprime_over_f: complex
    condition_hint: float
    is_zero: bool = False


@lru_cache(maxsize=256)
def scattering_matrix(graph: QuantumGraph) -> np.ndarray:
    """Bond scattering matrix with entries S[b, b'] = sigma(b, reverse(b')).

    The only non-zero entries connect b to bonds b' ending where b starts:
    2/(n+d) - 1 when b' is the reverse of b, 2/(n+d) otherwise.
    """
    bonds = graph.bonds
    n = len(bonds)
    S = np.zeros((n, n))
    arriving: dict[int, list[int]] = {}
    for b in bonds:
        arriving.setdefault(b.terminus, []).append(b.id)
    for b in bonds:
        v = b.origin
        total = graph.leads(v) + graph.degree(v)
        assert total > 0
        t = 2.0 / total
        for bp in arriving[v]:
            S[b.id, bp] = t - 1.0 if bonds[bp].reverse == b.id else t
    S.setflags(write=False)
    return S


@lru_cache(maxsize=64)
def _inverse_scattering(graph: QuantumGraph) -> np.ndarray:
    Sinv = np.linalg.inv(scattering_matrix(graph))
    Sinv.setflags(write=False)
    return Sinv


def build_S(graph: QuantumGraph) -> np.ndarray:
    return scattering_matrix(graph)


def phases(graph: QuantumGraph, z) -> np.ndarray:
    """exp(i z L_b); broadcasts over an array of z (bond axis last)."""
    z = np.asarray(z, dtype=complex)
    return np.exp(1j * z[..., None] * graph.bond_lengths)


def build_U(graph: QuantumGraph, z: complex) -> np.ndarray:
    return scattering_matrix(graph) * phases(graph, z)[None, :]


def build_dU(graph: QuantumGraph, z: complex) -> np.ndarray:
    """dU/dz = S D(z) i diag(L_b)."""
    return scattering_matrix(graph) * (phases(graph, z) * 1j * graph.bond_lengths)[None, :]


# once |e^{izL}| exceeds e^10 the phases are factored out of the determinant,
# otherwise the pivot test (relative to ||U||) misfires deep below the axis
_SCALE_EXPONENT = 10.0


def _evaluate_scaled(graph: QuantumGraph, z: complex) -> SecularEvaluation:
    """Deep below the axis: Id - S D = (D^{-1} - S) D, with log|det D| = -2 L_Q Im z."""
    S = scattering_matrix(graph)
    L = graph.bond_lengths
    n = S.shape[0]
    dinv = np.exp(-1j * z * L)
    M = np.diag(dinv) - S
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    absd = np.abs(np.diag(lu))
    scale = max(1.0, float(np.abs(S).sum(axis=0).max()))
    hint = float(absd.min() / scale)
    if absd.min() <= 1e3 * EPS * scale:
        return SecularEvaluation(z, 0j, -math.inf, complex(math.inf, 0.0), hint, is_zero=True)
    LQ = graph.total_length
    log_abs = float(np.sum(np.log(absd))) - 2 * LQ * z.imag
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    phase = np.prod(np.diag(lu) / absd) * (-1.0 if swaps % 2 else 1.0) * np.exp(2j * LQ * z.real)
    f = complex(phase * math.exp(log_abs)) if log_abs < 700 else complex(phase * math.inf)
    # d/dz log det(D^{-1} - S) = Tr[(D^{-1} - S)^{-1} (-i L D^{-1})]
    X = sla.lu_solve((lu, piv), np.diag(-1j * L * dinv), check_finite=False)
    return SecularEvaluation(z, f, log_abs, complex(2j * LQ + np.trace(X)), hint)


def evaluate(graph: QuantumGraph, z: complex) -> SecularEvaluation:
    """f(z), log|f(z)| and f'/f(z) from one pivoted LU factorization."""
    z = complex(z)
    n = graph.n_bonds
    if n == 0:
        return SecularEvaluation(z, 1.0 + 0j, 0.0, 0j, 1.0)
    if -z.imag * float(graph.bond_lengths.max()) > _SCALE_EXPONENT:
        return _evaluate_scaled(graph, z)
    U = build_U(graph, z)
    M = np.eye(n) - U
    with warnings.catch_warnings():
        # an exactly singular factor is reported through the zero flag below
        warnings.simplefilter("ignore", sla.LinAlgWarning)
        lu, piv = sla.lu_factor(M, check_finite=False)
    diag = np.diag(lu)
    absd = np.abs(diag)
    unorm = max(1.0, float(np.abs(U).sum(axis=0).max()))
    hint = float(absd.min() / unorm)
    if absd.min() <= 1e3 * EPS * unorm:
        return SecularEvaluation(z, 0j, -math.inf, complex(math.inf, 0.0), hint, is_zero=True)
    log_abs = float(np.sum(np.log(absd)))
    swaps = int(np.count_nonzero(piv != np.arange(n)))
    phase = np.prod(diag / absd) * (-1.0 if swaps % 2 else 1.0)
    f = complex(phase * math.exp(log_abs)) if log_abs < 700 else complex(phase * math.inf)
    X = sla.lu_solve((lu, piv), U * (1j * graph.bond_lengths)[None, :], check_finite=False)
    return SecularEvaluation(z, f, log_abs, complex(-np.trace(X)), hint)


def _chunks(m: int, n: int):
    step = max(1, _BATCH_BYTES // (32 * max(n, 1) ** 2))
    for start in range(0, m, step):
        yield slice(start, min(m, start + step))


def log_derivative(graph: QuantumGraph, zs) -> np.ndarray:
    """f'/f at every point of ``zs`` (any shape) by batched dense solves.

    Exactly singular points return ``inf``.
    """
    zs = np.asarray(zs, dtype=complex)
    if zs.size >= 32 and _band_plan(graph) is not None:
        if zs.imag.min() > 0:
            return log_derivative_banded(graph, zs, "upper")
        if zs.imag.max() < _tight_depth(graph):
            return log_derivative_banded(graph, zs, "lower")
    flat = zs.ravel()
    S = scattering_matrix(graph)
    L = graph.bond_lengths
    n = S.shape[0]
    out = np.empty(flat.shape, dtype=complex)
    if n == 0:
        out[:] = 0
        return out.reshape(zs.shape)
    deep = -flat.imag * L.max() > _SCALE_EXPONENT
    eye = np.eye(n)
    for mask in (~deep, deep):
        idx = np.flatnonzero(mask)
        for sl in _chunks(idx.size, n):
            pts = idx[sl]
            z = flat[pts]
            try:
                if mask is deep:
                    dinv = np.exp(-1j * z[:, None] * L)
                    M = dinv[:, :, None] * eye - S[None]
                    X = np.linalg.solve(M, (-1j * L * dinv)[:, :, None] * eye)
                    out[pts] = 2j * graph.total_length + np.trace(X, axis1=1, axis2=2)
                else:
                    U = S[None, :, :] * phases(graph, z)[:, None, :]
                    X = np.linalg.solve(eye - U, U * (1j * L))
                    out[pts] = -np.trace(X, axis1=1, axis2=2)
            except np.linalg.LinAlgError:
                for k in pts:
                    out[k] = evaluate(graph, flat[k]).fprime_over_f
    return out.reshape(zs.shape)


def log_abs_det(graph: QuantumGraph, zs) -> tuple[np.ndarray, np.ndarray]:
    """(phase, log|f|) at every point of ``zs``; phase is 0 where f vanishes."""
    zs = np.asarray(zs, dtype=complex)
    flat = zs.ravel()
    S = scattering_matrix(graph)
    n = S.shape[0]
    sign = np.ones(flat.shape, dtype=complex)
    logabs = np.zeros(flat.shape)
    if n:
        eye = np.eye(n)
        L = graph.bond_lengths
        LQ = graph.total_length
        deep = -flat.imag * L.max() > _SCALE_EXPONENT
        for mask in (~deep, deep):
            idx = np.flatnonzero(mask)
            for sl in _chunks(idx.size, n):
                pts = idx[sl]
                z = flat[pts]
                if mask is deep:
                    # det(Id - S D) = det(D^{-1} - S) exp(2 i z L_Q)
                    M = np.exp(-1j * z[:, None] * L)[:, :, None] * eye - S[None]
                    sg, la = np.linalg.slogdet(M)
                    sign[pts] = sg * np.exp(2j * LQ * z.real)
                    logabs[pts] = la - 2 * LQ * z.imag
                else:
                    U = S[None, :, :] * phases(graph, z)[:, None, :]
                    sign[pts], logabs[pts] = np.linalg.slogdet(eye - U)
    return sign.reshape(zs.shape), logabs.reshape(zs.shape)


def secular_det(graph: QuantumGraph, zs) -> np.ndarray:
    """f(z) itself; overflows to inf where |f| exceeds double range."""
    sign, logabs = log_abs_det(graph, zs)
    with np.errstate(over="ignore"):
        return sign * np.exp(logabs)


def diagonal_entries(graph: QuantumGraph, z: complex) -> np.ndarray:
    """All diagonal entries of U'(z) (Id - U(z))^{-1}, one per bond."""
    U = build_U(graph, z)
    n = U.shape[0]
    lu = sla.lu_factor(np.eye(n) - U, check_finite=False)
    if np.abs(np.diag(lu[0])).min() <= 1e3 * EPS * max(1.0, np.abs(U).sum(axis=0).max()):
        raise DomainError(f"Id - U(z) is numerically singular at z={z}")
    Y = sla.lu_solve(lu, np.eye(n), check_finite=False)
    dU = U * (1j * graph.bond_lengths)[None, :]
    return np.einsum("ij,ji->i", dU, Y)


def log_derivative_neumann(graph: QuantumGraph, z: complex, rtol: float = 1e-15) -> complex:
    """f'/f for Im z > 0 from the Neumann series of (Id - U)^{-1}.

    f'/f = -sum_{k>=0} Tr[U' U^k]; the remainder after K terms is bounded by
    Tr-norm(U') q^K / (1 - q) with q = ||U(z)|| <= exp(-Im z Lmin).
    """
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("Neumann series needs Im z > 0")
    U = build_U(graph, z)
    dU = U * (1j * graph.bond_lengths)[None, :]
    q = math.exp(-z.imag * float(graph.bond_lengths.min()))
    scale = float(np.abs(graph.bond_lengths).sum()) * q
    total = 0j
    P = dU
    for _ in range(100000):
        total += np.trace(P)
        scale *= q
        if scale / (1 - q) <= rtol * max(abs(total), 1e-300) or scale / (1 - q) < 1e-300:
            break
        P = P @ U
    return -total


def log_derivative_inverse_series(graph: QuantumGraph, z: complex, params: GraphClassParams | None = None,
                                  rtol: float = 1e-15) -> complex:
    """f'/f for Im z < Y from 2i L_Q + i sum_{k>=1} Tr[U^{-k} L].

    Follows from (Id - U)^{-1} U = -sum_{k>=0} U^{-k} when ||U^{-1}|| < 1.
    """
    z = complex(z)
    params = params or GraphClassParams.of(graph)
    Y = -math.log(params.D + params.n0) / params.Lmin
    if z.imag >= Y:
        raise DomainError(f"inverse series needs Im z < Y = {Y}")
    Linv = np.exp(-1j * z * graph.bond_lengths)
    Uinv = Linv[:, None] * _inverse_scattering(graph)
    q = (params.D + params.n0) * math.exp(z.imag * params.Lmin)
    Ldiag = graph.bond_lengths
    total = 0j
    P = Uinv.copy()
    bound = 2 * graph.total_length * q
    for _ in range(100000):
        total += np.sum(np.diag(P) * Ldiag)
        bound *= q
        if bound / (1 - q) <= rtol * max(abs(total), 2 * graph.total_length):
            break
        P = P @ Uinv
    return 2j * graph.total_length + 1j * total


def strip_depth_float(params: GraphClassParams) -> float:
    return -math.log(params.D + params.n0) / params.Lmin


def log_derivative_series_bound(graph: QuantumGraph, z: complex, params: GraphClassParams | None = None) -> float:
    """Closed-form control of f'/f away from the resonance strip.

    Im z > 0: bound on |f'/f|.  Im z < Y: bound on |f'/f - 2i L_Q|.
    """
    z = complex(z)
    params = params or GraphClassParams.of(graph)
    LQ = graph.total_length
    if z.imag > 0:
        q = math.exp(-z.imag * params.Lmin)
    else:
        Y = strip_depth_float(params)
        if z.imag >= Y:
            raise DomainError(f"no bound for Y={Y} <= Im z={z.imag} <= 0")
        q = math.exp((z.imag - Y) * params.Lmin)
    return 2 * LQ * q / (1 - q)


def check_class(graph: QuantumGraph, params: GraphClassParams | None) -> GraphClassParams:
    params = params or GraphClassParams.of(graph)
    from .graph import validate

    rep = validate(graph, params, require_unbalanced=True)
    if rep.violations:
        raise ParameterError("graph not in the unbalanced class: " + "; ".join(rep.violations))
    return params


def dump_matrix_csv(M: np.ndarray) -> str:
    """Row-major CSV with one `re,im` pair per entry."""
    lines = []
    for row in np.asarray(M, dtype=complex):
        lines.append(",".join(f"{c.real:.17g},{c.imag:.17g}" for c in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- banded path
#
# Off the resonance strip Id - U (Im z > 0) and Id - U^{-1} (Im z < Y) have
# numerical range in Re w >= 1 - q > 0, so elimination without pivoting is
# stable there.  After a bandwidth-reducing bond ordering the determinant
# derivative is carried through a banded LU in forward mode.


@dataclass(frozen=True)
class _BandPlan:
    perm: np.ndarray
    width: int
    S: np.ndarray
    Sinv: np.ndarray
    L: np.ndarray


@lru_cache(maxsize=64)
def _band_plan(graph: QuantumGraph) -> _BandPlan | None:
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import reverse_cuthill_mckee

    S = scattering_matrix(graph)
    n = S.shape[0]
    if n < 48 or not all(graph.leads(v.id) != graph.degree(v.id) for v in graph.vertices):
        return None
    Sinv = _inverse_scattering(graph)
    pattern = (np.abs(S) > 0) | (np.abs(S.T) > 0) | (np.abs(Sinv) > 1e-14) | (np.abs(Sinv.T) > 1e-14)
    perm = np.asarray(reverse_cuthill_mckee(csr_matrix(pattern.astype(float)), symmetric_mode=True))
    P = pattern[np.ix_(perm, perm)]
    i, j = np.nonzero(P)
    width = int(np.abs(i - j).max())
    if width > n // 6:
        return None
    return _BandPlan(perm, width, S[np.ix_(perm, perm)], Sinv[np.ix_(perm, perm)],
                     graph.bond_lengths[perm])


def _to_band(M: np.ndarray, w: int) -> np.ndarray:
    """Dense (batch, n, n) to band storage ab[:, i, d] = M[:, i, i + d - w]."""
    m, n, _ = M.shape
    ab = np.zeros((m, n, 2 * w + 1), dtype=complex)
    for d in range(-w, w + 1):
        idx = np.arange(max(0, -d), min(n, n - d))
        ab[:, idx, d + w] = M[:, idx, idx + d]
    return ab


def _banded_logdet_derivative(A: np.ndarray, dA: np.ndarray, w: int) -> np.ndarray:
    """d/dz log det A for band-stored A(z), dA(z); no pivoting."""
    m, n, _ = A.shape
    out = np.zeros(m, dtype=complex)
    r = np.arange(1, w + 1)
    c = np.arange(0, w + 1)
    for k in range(n):
        p = A[:, k, w]
        dp = dA[:, k, w]
        out += dp / p
        rows = r[k + r < n]
        if rows.size == 0:
            continue
        cols = c[k + c < n]
        # entries A[k + r, k] live at offset w - r
        l = A[:, k + rows, w - rows] / p[:, None]
        dl = (dA[:, k + rows, w - rows] - l * dp[:, None]) / p[:, None]
        pr = A[:, k, w + cols]
        dpr = dA[:, k, w + cols]
        ii = (k + rows)[:, None]
        jj = (cols[None, :] - rows[:, None] + w)
        A[:, ii, jj] -= l[:, :, None] * pr[:, None, :]
        dA[:, ii, jj] -= dl[:, :, None] * pr[:, None, :] + l[:, :, None] * dpr[:, None, :]
    return out


def log_derivative_banded(graph: QuantumGraph, zs, side: str) -> np.ndarray:
    """f'/f off the strip via banded elimination; ``side`` is 'upper' or 'lower'."""
    plan = _band_plan(graph)
    if plan is None:
        raise DomainError("graph has no useful banded ordering")
    zs = np.asarray(zs, dtype=complex)
    flat = zs.ravel()
    n, w = len(plan.perm), plan.width
    Sb = _to_band(plan.S[None].astype(complex), w)[0]
    Sib = _to_band(plan.Sinv[None].astype(complex), w)[0]
    # column index of each band slot, clipped; out-of-range slots are zero in Sb, Sib
    col = np.clip(np.arange(n)[:, None] + np.arange(-w, w + 1)[None, :], 0, n - 1)
    out = np.empty(flat.shape, dtype=complex)
    step = max(1, _BATCH_BYTES // (64 * n * (2 * w + 1)))
    iL = 1j * plan.L
    for start in range(0, flat.size, step):
        z = flat[start:start + step]
        e = np.exp(1j * z[:, None] * plan.L)
        if side == "upper":
            A = -Sb[None] * e[:, col]
            dA = A * iL[col][None]
        else:
            Ui = Sib[None] / e[:, :, None]
            A = -Ui
            dA = Ui * iL[None, :, None]
        A[:, :, w] += 1.0
        res = _banded_logdet_derivative(A, dA, w)
        if side == "lower":
            res = res + 2j * graph.total_length
        out[start:start + step] = res
    return out.reshape(zs.shape)


@lru_cache(maxsize=64)
def _tight_depth(graph: QuantumGraph) -> float:
    return strip_depth_float(GraphClassParams.of(graph))
