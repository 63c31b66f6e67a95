"""Adaptive Gauss-Kronrod quadrature along straight segments of the complex plane.

Panels use the 7-point Gauss rule embedded in the 15-point Kronrod rule;
|K15 - G7| serves as the (pessimistic) panel error estimate.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class QuadratureError(RuntimeError):
    """Adaptive refinement ran out of budget before meeting the tolerance."""


@dataclass(frozen=True)
class QuadResult:
    value: complex
    error: float
    n_evals: int
    max_abs: float
    panel_values: np.ndarray | None = None


_XK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
])
_WK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

# nodes on [0, 1]: symmetric pairs then the centre
NODES = np.concatenate([(1 - _XK[:7]) / 2, (1 + _XK[:7]) / 2, [0.5]])
W_KRONROD = np.concatenate([_WK[:7], _WK[:7], [_WK[7]]]) / 2
W_GAUSS = np.zeros(15)
for _k, _w in zip((1, 3, 5), _WG[:3]):
    W_GAUSS[_k] = W_GAUSS[_k + 7] = _w / 2
W_GAUSS[14] = _WG[3] / 2


def integrate_segment(
    func: Callable[[np.ndarray], np.ndarray],
    za: complex,
    zb: complex,
    tol: float,
    initial_panels: int = 1,
    max_panels: int = 50000,
    min_width: float = 1e-14,
    return_panels: bool = False,
) -> QuadResult:
    """Integrate ``func(z) dz`` along the segment from ``za`` to ``zb``.

    ``func`` receives an array of complex points.  ``tol`` is an absolute
    tolerance for the whole segment, shared among panels by width.  With
    ``return_panels`` the integral over each of the ``initial_panels``
    equal pieces is returned as well.
    """
    za, zb = complex(za), complex(zb)
    dz = zb - za
    n_evals = 0
    max_abs = 0.0

    edges = np.linspace(0.0, 1.0, initial_panels + 1)
    lo, hi = edges[:-1], edges[1:]
    owner = np.arange(initial_panels)
    per_panel = np.zeros(initial_panels, dtype=complex)
    err_total = 0.0
    n_panels = initial_panels
    while len(lo):
        t = lo[:, None] + (hi - lo)[:, None] * NODES[None, :]
        vals = np.asarray(func(za + dz * t), dtype=complex)
        n_evals += vals.size
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand not finite on the segment")
        max_abs = max(max_abs, float(np.abs(vals).max()))
        scale = (hi - lo) * dz
        k15 = (vals @ W_KRONROD) * scale
        g7 = (vals @ W_GAUSS) * scale
        err = np.abs(k15 - g7)
        ok = (err <= tol * (hi - lo)) | ((hi - lo) < min_width)
        np.add.at(per_panel, owner[ok], k15[ok])
        err_total += float(err[ok].sum())
        bad = ~ok
        n_panels += int(bad.sum())
        if n_panels > max_panels:
            raise QuadratureError(f"panel budget exhausted on segment {za}->{zb} (tol={tol:g})")
        mid = (lo[bad] + hi[bad]) / 2
        lo, hi = np.concatenate([lo[bad], mid]), np.concatenate([mid, hi[bad]])
        owner = np.concatenate([owner[bad], owner[bad]])
    return QuadResult(
        complex(per_panel.sum()), err_total, n_evals, max_abs,
        per_panel if return_panels else None,
    )
