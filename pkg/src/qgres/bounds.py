"""Explicit constants: strip depth, Gaussian parameters, Jensen counts, alpha threshold.

Constants are evaluated with mpmath at 40 digits and returned as floats.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import mpmath as mp
import numpy as np

from . import secular
from .graph import GraphClassParams, ParameterError, QuantumGraph

_DPS = 40


def _mpf(x) -> mp.mpf:
    return mp.mpf(x)


def _Y(params: GraphClassParams) -> mp.mpf:
    return -mp.log(params.D + params.n0) / _mpf(params.Lmin)


def strip_depth(params: GraphClassParams) -> float:
    """Y = -ln(D + n0) / Lmin: resonances of unbalanced class members have Im z >= Y."""
    with mp.workdps(_DPS):
        return float(_Y(params))


@dataclass(frozen=True)
class GaussianParams:
    y1: float
    y2: float
    a: float


def _gaussian_params_mp(params: GraphClassParams):
    Lmin = _mpf(params.Lmin)
    Y = _Y(params)
    y1 = Y - mp.log(16) / Lmin
    y2 = mp.log(32) / Lmin
    a = mp.log(2) / (2 * mp.log(32) / Lmin - Y) ** 2
    return y1, y2, a


def gaussian_params(params: GraphClassParams) -> GaussianParams:
    with mp.workdps(_DPS):
        y1, y2, a = _gaussian_params_mp(params)
        return GaussianParams(float(y1), float(y2), float(a))


def guaranteed_count(params: GraphClassParams, LQ: float = 1.0) -> float:
    """(L_Q / 8) sqrt(pi / a)."""
    with mp.workdps(_DPS):
        _, _, a = _gaussian_params_mp(params)
        return float(_mpf(LQ) / 8 * mp.sqrt(mp.pi / a))


def _jensen_bracket(params: GraphClassParams) -> mp.mpf:
    return 2 * _mpf(params.Lmax) * (1 + mp.log(params.D + params.n0)) / _mpf(params.Lmin)


def jensen_N0(source: QuantumGraph | GraphClassParams, LQ: float | None = None,
              params: GraphClassParams | None = None) -> float:
    """Bound on the number of resonances in any vertical strip of width 1/Lmin.

    With a graph, the bond-count form |B|/ln2 (bracket + e^-1/(1-e^-1)) is
    used; with class parameters and a total length, the length form
    L_Q/(Lmin ln2) (bracket + 0.6).
    """
    with mp.workdps(_DPS):
        if isinstance(source, QuantumGraph):
            params = params or GraphClassParams.of(source)
            e1 = mp.e ** -1
            return float(source.n_bonds / mp.log(2) * (_jensen_bracket(params) + e1 / (1 - e1)))
        if LQ is None or LQ <= 0:
            raise ParameterError("class form of jensen_N0 needs a positive total length")
        p = source
        return float(_mpf(LQ) / (_mpf(p.Lmin) * mp.log(2)) * (_jensen_bracket(p) + mp.mpf("0.6")))


def alpha_threshold(params: GraphClassParams) -> float:
    """Smallest admissible alpha/Lmin for the resonance-count lower bound."""
    with mp.workdps(_DPS):
        y1, _, a = _gaussian_params_mp(params)
        Lmin = _mpf(params.Lmin)
        inner = (
            Lmin * mp.log(2) * (1 - mp.exp(-a / Lmin**2))
            / (8 * (_jensen_bracket(params) + mp.mpf("0.6")))
            * mp.sqrt(mp.pi / a)
        )
        if inner <= 0:
            raise ParameterError("non-positive argument in alpha threshold logarithm")
        radicand = y1**2 - mp.log(inner) / a
        assert radicand >= 0
        return float(mp.sqrt(radicand))


def ball_count_bound(graph: QuantumGraph, z_center: complex, r: float,
                     params: GraphClassParams | None = None) -> float:
    """Jensen bound on the number of resonances in the disc B(z_center, r).

    The disc sits inside B(z', r') with Im z' = 1 and r' = r + |Y| + 1.
    ln max|f| on |z - z'| = 2r' is bounded by |B| exp(Lmax max(0, -Im z)),
    and -ln|f(z')| by |B| q/(1-q), q = exp(-Lmin).
    """
    params = params or GraphClassParams.of(graph)
    Y = strip_depth(params)
    rp = r + abs(Y) + 1.0
    nb = graph.n_bonds
    lowest = 1.0 - 2 * rp
    log_max = nb * math.exp(params.Lmax * max(0.0, -lowest))
    q = math.exp(-params.Lmin)
    neg_log_f = nb * q / (1 - q)
    return (log_max + neg_log_f) / math.log(2)


@dataclass
class LowerBoundCertificate:
    params: GraphClassParams
    Y: float
    y1: float
    y2: float
    a: float
    alpha_over_Lmin: float
    guaranteed_count: float
    N0_bound: float
    x0: float
    observed_count: int
    verdict: bool
    in_class: bool = True

    KEYS = ("Y", "y1", "y2", "a", "alpha_over_Lmin", "guaranteed_count", "N0_bound",
            "observed_count", "verdict")

    def as_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.KEYS}
        d["x0"] = self.x0
        d["in_class"] = self.in_class
        d["params"] = asdict(self.params)
        return d

    def to_text(self) -> str:
        lines = [f"D = {self.params.D}", f"n0 = {self.params.n0}",
                 f"Lmin = {self.params.Lmin!r}", f"Lmax = {self.params.Lmax!r}", f"x0 = {self.x0!r}"]
        for k in self.KEYS:
            v = getattr(self, k)
            lines.append(f"{k} = {v:.17g}" if isinstance(v, float) else f"{k} = {v}")
        lines.append(f"in_class = {self.in_class}")
        return "\n".join(lines) + "\n"


def certificate_constants(params: GraphClassParams, LQ: float) -> dict:
    gp = gaussian_params(params)
    return dict(
        Y=strip_depth(params), y1=gp.y1, y2=gp.y2, a=gp.a,
        alpha_over_Lmin=alpha_threshold(params),
        guaranteed_count=guaranteed_count(params, LQ),
        N0_bound=jensen_N0(params, LQ=LQ),
    )


def verify_lower_bound(graph: QuantumGraph, params: GraphClassParams, x0: float = 0.0,
                       resonances=None, tol: float = 1e-8, require_class: bool = True) -> LowerBoundCertificate:
    """Count resonances with |Re z - x0| <= alpha/Lmin and compare with (L_Q/8) sqrt(pi/a).

    ``resonances`` may be a precomputed ResonanceSet covering the window.
    With ``require_class=False`` a graph outside the declared class is still
    counted (searching its own tight strip) and flagged ``in_class=False``.
    """
    from .finder import locate_in_strip
    from .graph import validate

    in_class = not validate(graph, params, require_unbalanced=True).violations
    if not in_class:
        if require_class:
            secular.check_class(graph, params)
        search = secular.check_class(graph, None)
    else:
        search = params
    c = certificate_constants(params, graph.total_length)
    half = c["alpha_over_Lmin"]
    if resonances is None:
        resonances = locate_in_strip(graph, x0 - half - 0.5, x0 + half + 0.5, tol=tol, params=search)
    elif not (resonances.region.x_lo <= x0 - half and resonances.region.x_hi >= x0 + half):
        raise ParameterError("supplied resonances do not cover the counting window")
    # ties within tol of the window edge count as inside
    observed = int(sum(m for z, m in resonances.entries if abs(z.real - x0) <= half + tol))
    return LowerBoundCertificate(params=params, x0=float(x0), observed_count=observed,
                                 verdict=observed >= c["guaranteed_count"], in_class=in_class, **c)


def strip_counts(resonances, width: float, starts) -> np.ndarray:
    """Number of located resonances in each closed strip [s, s + width]."""
    re = np.repeat(resonances.points.real, resonances.multiplicities) if resonances.entries else np.zeros(0)
    starts = np.asarray(starts, dtype=float)
    return np.array([int(np.count_nonzero((re >= s) & (re <= s + width))) for s in starts])
