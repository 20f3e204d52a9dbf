"""Dirichlet kernel of the upper half-plane and its discrete quadratures.

The kernel is

    G(x, y) = (1/4pi) * log(1 + 4 x2 y2 / |x - y|^2)
            = (1/2pi) * (log|x - y*| - log|x - y|),   y* = (y1, -y2),

nonnegative, symmetric, vanishing on the wall x2 = 0, and scale invariant
(G(sx, sy) = G(x, y)).  The stream function of a nonnegative vorticity field
is psi = integral G(., y) w(y) dy and the induced velocity is
u = (d2 psi, -d1 psi), so that a positive blob drifts toward +x1 under its
own image.

Grid quadratures integrate the kernel exactly over source cells (closed-form
corner integrals of log|z| over rectangles), which removes the logarithmic
singularity and keeps the row-pair weights Toeplitz in the horizontal index;
the grid stream evaluation contracts them with an FFT per target row.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi


class GreenSingularityError(ValueError):
    """Pointwise kernel evaluation requested at coincident points."""


class DivergentMomentError(ValueError):
    """Kernel moment requested with an exponent at or below 2."""


def _as_points(x):
    a = np.asarray(x, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("points must have shape (..., 2)")
    return a


def green_eval(x, y):
    """Pointwise kernel G(x, y); broadcasts over trailing point axes."""
    xa, ya = _as_points(x), _as_points(y)
    x1, x2 = xa[..., 0], xa[..., 1]
    y1, y2 = ya[..., 0], ya[..., 1]
    if np.any(x2 < 0.0) or np.any(y2 < 0.0):
        raise ValueError("kernel arguments must lie in the closed upper half-plane")
    d2 = (x1 - y1) ** 2 + (x2 - y2) ** 2
    if np.any(d2 == 0.0):
        raise GreenSingularityError(
            "kernel is singular at coincident points; integrate with cell averages"
        )
    out = np.log1p(4.0 * x2 * y2 / d2) / FOUR_PI
    return float(out) if out.ndim == 0 else out


def green_blob(x, y, blob):
    """Regularized kernel (1/4pi) log((|x-y*|^2 + b^2) / (|x-y|^2 + b^2))."""
    xa, ya = _as_points(x), _as_points(y)
    x1, x2 = xa[..., 0], xa[..., 1]
    y1, y2 = ya[..., 0], ya[..., 1]
    b2 = float(blob) ** 2
    dfree = (x1 - y1) ** 2 + (x2 - y2) ** 2 + b2
    dimg = (x1 - y1) ** 2 + (x2 + y2) ** 2 + b2
    out = np.log(dimg / dfree) / FOUR_PI
    return float(out) if out.ndim == 0 else out


def green_blob_self(height, blob):
    """Self-energy weight (1/4pi) log((4 h^2 + b^2) / b^2) of one blob."""
    h = np.asarray(height, dtype=float)
    b2 = float(blob) ** 2
    if b2 == 0.0:
        raise GreenSingularityError("self interaction requires a positive blob radius")
    out = np.log((4.0 * h * h + b2) / b2) / FOUR_PI
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# exact cell averages of log|z|


def _corner_primitive(a, b):
    """Integral of log|z| over the rectangle [0,a] x [0,b], a,b >= 0."""
    r2 = a * a + b * b
    safe = np.where(r2 > 0.0, r2, 1.0)
    ab = a * b
    return 0.5 * (
        ab * np.log(safe)
        - 3.0 * ab
        + a * a * np.arctan2(b, a)
        + b * b * np.arctan2(a, b)
    )


def _signed_primitive(a, b):
    # odd continuation in each argument
    return np.sign(a) * np.sign(b) * _corner_primitive(np.abs(a), np.abs(b))


def average_log_distance(dx, dy, h):
    """Mean of log|z| over an h-square centered at (dx, dy), exactly.

    Valid for any center, including squares containing the origin: the
    primitive is odd in each argument, so the four-corner combination
    integrates the (integrable) singularity correctly.
    """
    hh = 0.5 * h
    u1, u2 = dx - hh, dx + hh
    v1, v2 = dy - hh, dy + hh
    s = (
        _signed_primitive(u2, v2)
        - _signed_primitive(u1, v2)
        - _signed_primitive(u2, v1)
        + _signed_primitive(u1, v1)
    )
    return s / (h * h)


# ---------------------------------------------------------------------------
# grid stream evaluation


@lru_cache(maxsize=4)
def _row_pair_kernel(nrows: int, ncols: int, cell: float) -> np.ndarray:
    """Weights K[i, j, d]: mean of G over a source cell in row j offset by d
    columns from a target at the center of a row-i cell.  Symmetric in (i, j)
    and even in the column offset, so only nonnegative offsets are stored."""
    heights = (np.arange(nrows) + 0.5) * cell
    offsets = np.arange(ncols) * cell
    out = np.empty((nrows, nrows, ncols))
    for i in range(nrows):
        dy_free = heights[i:] - heights[i]
        dy_image = heights[i:] + heights[i]
        free = average_log_distance(offsets[None, :], dy_free[:, None], cell)
        image = average_log_distance(offsets[None, :], dy_image[:, None], cell)
        block = (image - free) / TWO_PI
        out[i, i:] = block
        out[i:, i] = block
    return out


def _symmetric_pad(block: np.ndarray, ncols: int) -> np.ndarray:
    """Embed even one-sided rows (length n) into circulant rows (length 2n)."""
    padded = np.zeros((block.shape[0], 2 * ncols))
    padded[:, :ncols] = block
    padded[:, ncols + 1 :] = block[:, :0:-1]
    return padded


def toeplitz_contract(values: np.ndarray, cell: float, row_block) -> np.ndarray:
    """Contract cell values with a row-pair Toeplitz kernel by FFT.

    ``row_block(i)`` must return the (nrows, ncols) weight block for target
    row i, even in the column offset.  Returns the field of weighted sums
    times the cell area.
    """
    nrows, ncols = values.shape
    spectra = np.fft.rfft(values, n=2 * ncols, axis=1)
    out = np.empty_like(values, dtype=float)
    for i in range(nrows):
        khat = np.fft.rfft(_symmetric_pad(row_block(i), ncols), axis=1)
        acc = (khat * spectra).sum(axis=0)
        out[i] = np.fft.irfft(acc, n=2 * ncols)[:ncols]
    return out * cell * cell


@lru_cache(maxsize=3)
def _row_pair_spectra(nrows: int, ncols: int, cell: float) -> np.ndarray:
    """FFT of the circulant embedding of every weight block, precomputed so
    repeated stream solves on one grid pay the kernel transform once."""
    kernel = _row_pair_kernel(nrows, ncols, cell)
    out = np.empty((nrows, nrows, ncols + 1), dtype=complex)
    for i in range(nrows):
        out[i] = np.fft.rfft(_symmetric_pad(kernel[i], ncols), axis=1)
    return out


def stream_grid(field) -> np.ndarray:
    """Stream values at every cell center of ``field`` (exact cell-averaged
    kernel weights, FFT-contracted row by row)."""
    nrows, ncols = field.nrows, field.ncols
    khat = _row_pair_spectra(nrows, ncols, float(field.cell))
    spectra = np.fft.rfft(field.values, n=2 * ncols, axis=1)
    out = np.empty((nrows, ncols))
    for i in range(nrows):
        acc = (khat[i] * spectra).sum(axis=0)
        out[i] = np.fft.irfft(acc, n=2 * ncols)[:ncols]
    return out * field.cell * field.cell


def stream_eval(field, x):
    """Stream function of ``field`` at one target or an (M, 2) array.

    Every source cell is integrated exactly, so targets inside cells (the
    singular case) need no special handling.
    """
    pts = np.atleast_2d(_as_points(x))
    vals = field.values
    h = field.cell
    mask = vals != 0.0
    if not mask.any():
        out = np.zeros(len(pts))
        return float(out[0]) if np.asarray(x).ndim == 1 else out
    cy1, cy2 = field.cell_centers()
    src1 = cy1[mask]
    src2 = cy2[mask]
    w = vals[mask] * h * h
    out = np.empty(len(pts))
    for k, (tx1, tx2) in enumerate(pts):
        free = average_log_distance(tx1 - src1, tx2 - src2, h)
        image = average_log_distance(tx1 - src1, tx2 + src2, h)
        out[k] = (w * (image - free)).sum() / TWO_PI
    return float(out[0]) if np.asarray(x).ndim == 1 else out


# ---------------------------------------------------------------------------
# velocity


def _source_particles(source, blob):
    """Positions, circulations and default blob radius of a velocity source."""
    values = getattr(source, "values", None)
    if values is not None:
        h = source.cell
        mask = values != 0.0
        c1, c2 = source.cell_centers()
        pos = np.column_stack([c1[mask], c2[mask]])
        circ = values[mask] * h * h
        radius = 2.0 * h if blob is None else float(blob)
        return pos, circ, radius
    pos = np.asarray(source.positions, dtype=float)
    circ = np.asarray(source.circulations, dtype=float)
    radius = source.blob_radius if blob is None else float(blob)
    return pos, circ, float(radius)


def velocity_sum(targets, positions, circulations, blob):
    """Image-symmetric regularized velocity at ``targets`` (M, 2).

    u1 = sum G/(2pi) [ (x2+z2)/D* - (x2-z2)/D ]
    u2 = sum G/(2pi) [ (x1-z1)/D  - (x1-z1)/D* ]
    with D = |x-z|^2 + b^2 and D* = |x-z*|^2 + b^2.  On the wall D = D*, so
    u2 vanishes there identically.
    """
    t = np.atleast_2d(np.asarray(targets, dtype=float))
    b2 = float(blob) ** 2
    out = np.empty((len(t), 2))
    chunk = max(1, int(4_000_000 // max(len(positions), 1)))
    for start in range(0, len(t), chunk):
        tx = t[start : start + chunk]
        dx = tx[:, 0:1] - positions[None, :, 0]
        dyf = tx[:, 1:2] - positions[None, :, 1]
        dyi = tx[:, 1:2] + positions[None, :, 1]
        dfree = dx * dx + dyf * dyf + b2
        dimg = dx * dx + dyi * dyi + b2
        if b2 == 0.0:
            dfree = np.where(dfree == 0.0, np.inf, dfree)
        u1 = ((dyi / dimg - dyf / dfree) * circulations).sum(axis=1)
        u2 = ((dx / dfree - dx / dimg) * circulations).sum(axis=1)
        out[start : start + chunk, 0] = u1 / TWO_PI
        out[start : start + chunk, 1] = u2 / TWO_PI
    return out


def velocity_eval(source, x, blob=None):
    """Velocity induced by a grid field or particle ensemble at ``x``.

    Returns an (M, 2) array for batched targets, or a length-2 array for one
    point.  The regularization radius defaults to twice the grid spacing for
    grid sources and to the stored blob radius for ensembles.
    """
    pos, circ, radius = _source_particles(source, blob)
    single = np.asarray(x).ndim == 1
    if len(pos) == 0:
        res = np.zeros((1 if single else len(np.atleast_2d(x)), 2))
    else:
        res = velocity_sum(np.atleast_2d(_as_points(x)), pos, circ, radius)
    return res[0] if single else res


# ---------------------------------------------------------------------------
# kernel moments


def _gauss_panel(lo, hi, nodes, weights):
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    return mid + half * nodes, half * weights


def green_pnorm_moment(x, q, rel_tol=1e-9):
    """Integral of G(x, .)^q over the half-plane, q > 2.

    Quadrature in absolute coordinates: dyadic radial panels centered at the
    singularity resolve the log^q blowup, and doubling far shells stop once
    their relative contribution falls below ``rel_tol``.  The result equals
    x2^2 times a constant depending only on q.
    """
    if q <= 2.0:
        raise DivergentMomentError("kernel moment diverges for exponents <= 2")
    x = _as_points(x)
    x1, x2 = float(x[0]), float(x[1])
    if x2 < 0.0:
        raise ValueError("moment target must lie in the closed upper half-plane")
    if x2 == 0.0:
        return 0.0

    gl_nodes, gl_weights = np.polynomial.legendre.leggauss(16)
    thetas_full = np.linspace(0.0, TWO_PI, 65)[:-1]  # periodic trapezoid

    def ring_value(r):
        # r: radial nodes (n,), full circle; returns sum over theta of G^q
        y2 = x2 + np.outer(r, np.sin(thetas_full))
        np.clip(y2, 0.0, None, out=y2)
        g = np.log1p(4.0 * x2 * y2 / (r * r)[:, None]) / FOUR_PI
        return (g**q).sum(axis=1) * (TWO_PI / len(thetas_full))

    total = 0.0
    # inner dyadic panels, radius from x2 down to 2^-40 x2
    for k in range(40):
        hi = x2 * 0.5**k
        lo = 0.5 * hi
        r, w = _gauss_panel(lo, hi, gl_nodes, gl_weights)
        total += (w * r * ring_value(r)).sum()

    # outer doubling shells with wall-clipped arcs
    for k in range(80):
        lo = x2 * 2.0**k
        hi = 2.0 * lo
        r, w = _gauss_panel(lo, hi, gl_nodes, gl_weights)
        shell = 0.0
        for rv, wv in zip(r, w):
            alpha = np.arcsin(min(1.0, x2 / rv))
            tn, tw = _gauss_panel(-alpha, np.pi + alpha, gl_nodes, gl_weights)
            y2 = x2 + rv * np.sin(tn)
            np.clip(y2, 0.0, None, out=y2)
            g = np.log1p(4.0 * x2 * y2 / (rv * rv)) / FOUR_PI
            shell += wv * rv * (tw * g**q).sum()
        total += shell
        if k >= 1 and shell < rel_tol * total:
            break
    return total
