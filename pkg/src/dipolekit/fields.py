"""Grid fields, patch contours, rearrangement, and contour perturbation.

A ``GridField`` stores nonnegative cell values on a uniform rectangle whose
bottom edge sits on the wall x2 = 0.  A ``ContourPolygon`` is a closed,
counterclockwise, simple polygon bounding a patch; symmetric patches are
equivalently encoded by their half-width curve l(x2) (the boundary is
x1 = +-l(x2)), which is the representation the tail-perturbation generator
works with.

The tail generator widens a symmetric patch into a smooth contour whose
half-width attains a prescribed maximum L inside a narrow spike window while
staying L1-close to the original curve: the base width is mollified, a
shrinking-width bump of calibrated amplitude is multiplied in (so the bump's
own L1 mass stays below the budget at every amplitude), a small offset keeps
the width positive, and endpoint windows taper the curve to zero with a
square-root-type profile whose vertical tangency rounds the support endpoints
into smooth caps.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


class FieldFormatError(ValueError):
    """Malformed grid-field or contour file."""


class OutOfBoundsError(ValueError):
    """Contour does not fit inside the target grid rectangle."""


class DegeneratePolygonError(ValueError):
    """Polygon with one or two vertices (no interior, no perimeter)."""


class OrientationError(ValueError):
    """Polygon vertices are not counterclockwise."""


class SimplicityError(ValueError):
    """Polygon edges self-intersect."""


class SymmetryGridError(ValueError):
    """Grid not symmetric about x1 = 0, so rows cannot be rearranged evenly."""


class TailParamError(ValueError):
    """Tail-perturbation parameters violate their ordering constraints."""


# ---------------------------------------------------------------------------
# grid fields


@dataclass
class GridField:
    """Cell-averaged nonnegative scalar on a uniform half-plane rectangle.

    ``values[j, i]`` is the cell in row j (height index, wall at j = 0) and
    column i (horizontal index).  Cell centers sit at
    (origin_x1 + (i + 1/2) h, (j + 1/2) h) with h the cell size.
    """

    origin_x1: float
    cell: float
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 2:
            raise ValueError("values must be a (nrows, ncols) array")
        if not self.cell > 0.0:
            raise ValueError("cell size must be positive")
        if vals.size and vals.min() < 0.0:
            if vals.min() < -1e-12 * max(1.0, abs(vals).max()):
                raise ValueError("field values must be nonnegative")
            vals = np.clip(vals, 0.0, None)
        self.values = vals
        self.origin_x1 = float(self.origin_x1)
        self.cell = float(self.cell)

    @property
    def nrows(self) -> int:
        return self.values.shape[0]

    @property
    def ncols(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> float:
        return self.ncols * self.cell

    @property
    def height(self) -> float:
        return self.nrows * self.cell

    @property
    def extent(self):
        return (self.width, self.height)

    @property
    def x1_centers(self) -> np.ndarray:
        return self.origin_x1 + (np.arange(self.ncols) + 0.5) * self.cell

    @property
    def x2_centers(self) -> np.ndarray:
        return (np.arange(self.nrows) + 0.5) * self.cell

    def cell_centers(self):
        """Broadcastable (nrows, ncols) center coordinate arrays."""
        return (
            np.broadcast_to(self.x1_centers[None, :], self.values.shape),
            np.broadcast_to(self.x2_centers[:, None], self.values.shape),
        )

    def with_values(self, values) -> "GridField":
        return GridField(self.origin_x1, self.cell, values)

    @classmethod
    def zeros(cls, origin_x1: float, cell: float, nrows: int, ncols: int):
        return cls(origin_x1, cell, np.zeros((nrows, ncols)))

    def is_symmetric_grid(self) -> bool:
        return (
            self.ncols % 2 == 0
            and abs(self.origin_x1 + 0.5 * self.width) < 1e-9 * max(self.cell, 1.0)
        )


def validate_vorticity(f: GridField):
    """Check the compact-support convention: outermost cell ring is empty."""
    v = f.values
    ring = np.concatenate([v[0], v[-1], v[:, 0], v[:, -1]])
    if np.any(ring != 0.0):
        raise ValueError("vorticity must vanish on the outermost cell ring")


def grid_norms(f: GridField, p: float):
    """(mass, impulse, Lp norm) of a field; p >= 1."""
    if p < 1.0:
        raise ValueError("norm exponent must be >= 1")
    area = f.cell * f.cell
    mass = f.values.sum() * area
    impulse = (f.values * f.x2_centers[:, None]).sum() * area
    lp = ((f.values**p).sum() * area) ** (1.0 / p)
    return float(mass), float(impulse), float(lp)


def steiner_symmetrize(f: GridField) -> GridField:
    """Row-wise symmetric decreasing rearrangement about x1 = 0.

    Each row's values are sorted and re-placed on cells ordered by distance
    from the axis, positive side first.  The per-row multiset of values is
    preserved exactly, hence so are mass, impulse, and every Lq norm; rows
    become non-increasing away from the axis and even in x1 up to one sorted
    rank per mirror pair (exact evenness and exact multiset preservation are
    incompatible on a grid).  The operation is idempotent and, because every
    row-pair kernel weight decreases with horizontal separation, it never
    decreases the interaction energy.
    """
    if not f.is_symmetric_grid():
        raise SymmetryGridError(
            "symmetrization requires an even column count centered on x1 = 0"
        )
    half = f.ncols // 2
    order = np.empty(f.ncols, dtype=int)
    order[0::2] = half + np.arange(half)
    order[1::2] = half - 1 - np.arange(half)
    ranked = np.sort(f.values, axis=1)[:, ::-1]
    out = np.empty_like(ranked)
    out[:, order] = ranked
    return f.with_values(out)


# ---------------------------------------------------------------------------
# contours


def _signed_area(verts: np.ndarray) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _proper_intersections(verts: np.ndarray) -> bool:
    """True if any two non-adjacent edges cross in their interiors."""
    n = len(verts)
    a = verts
    b = np.roll(verts, -1, axis=0)
    d = b - a
    lengths = np.hypot(d[:, 0], d[:, 1])
    live = lengths > 0.0
    idx = np.nonzero(live)[0]
    for ii, e in enumerate(idx):
        others = idx[ii + 1 :]
        gap = (others - e) % n
        mask = (gap > 1) & (gap < n - 1)
        others = others[mask]
        if len(others) == 0:
            continue
        p, r = a[e], d[e]
        q, s = a[others], d[others]
        denom = r[0] * s[:, 1] - r[1] * s[:, 0]
        qp = q - p
        t_num = qp[:, 0] * s[:, 1] - qp[:, 1] * s[:, 0]
        u_num = qp[:, 0] * r[1] - qp[:, 1] * r[0]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = t_num / denom
            u = u_num / denom
        crossing = (
            (denom != 0.0) & (t > 1e-12) & (t < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        )
        if np.any(crossing):
            return True
    return False


_SIMPLICITY_CHECK_LIMIT = 2500


@dataclass
class ContourPolygon:
    """Closed counterclockwise polygon in the upper half-plane.

    ``touching`` permits vertices on the wall x2 = 0.  Simplicity is checked
    at construction for polygons up to a size cap (the quadratic test is too
    slow for long filament contours produced during evolution).
    """

    vertices: np.ndarray
    touching: bool = False

    def __post_init__(self):
        verts = np.asarray(self.vertices, dtype=float)
        if verts.size == 0:
            self.vertices = verts.reshape(0, 2)
            return
        if verts.ndim != 2 or verts.shape[1] != 2:
            raise ValueError("vertices must be an (n, 2) array")
        if len(verts) < 3:
            raise DegeneratePolygonError("a polygon needs at least 3 vertices")
        floor = -1e-12 * max(1.0, float(np.abs(verts).max()))
        if verts[:, 1].min() < floor:
            raise ValueError("contour vertices must lie in the upper half-plane")
        if not self.touching and verts[:, 1].min() <= 0.0:
            raise ValueError("wall vertices require the touching flag")
        if _signed_area(verts) < 0.0:
            raise OrientationError("vertices must wind counterclockwise")
        if len(verts) <= _SIMPLICITY_CHECK_LIMIT and _proper_intersections(verts):
            raise SimplicityError("contour edges must not cross")
        self.vertices = verts

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def area(self) -> float:
        return 0.0 if self.is_empty else _signed_area(self.vertices)


def contour_perimeter(contour: ContourPolygon) -> float:
    """Total edge length of the closed polygon."""
    if len(contour.vertices) < 3:
        raise DegeneratePolygonError("perimeter needs at least 3 vertices")
    d = np.roll(contour.vertices, -1, axis=0) - contour.vertices
    return float(np.hypot(d[:, 0], d[:, 1]).sum())


def rasterize(contour: ContourPolygon, template: GridField, subsamples: int = 16) -> GridField:
    """Area-fraction indicator of the polygon on the template grid.

    Scanline sampling: each cell is probed on a subsamples x subsamples
    midpoint lattice, rows at a time, with crossing parity against the
    polygon edges deciding membership.  Values land in [0, 1].
    """
    if contour.is_empty:
        return template.with_values(np.zeros_like(template.values))
    verts = contour.vertices
    x_lo = template.origin_x1
    x_hi = template.origin_x1 + template.width
    if (
        verts[:, 0].min() < x_lo - 1e-12
        or verts[:, 0].max() > x_hi + 1e-12
        or verts[:, 1].min() < -1e-12
        or verts[:, 1].max() > template.height + 1e-12
    ):
        raise OutOfBoundsError("contour exceeds the template rectangle")
    a = verts
    b = np.roll(verts, -1, axis=0)
    ya, yb = a[:, 1], b[:, 1]
    xa, xb = a[:, 0], b[:, 0]
    nrows, ncols = template.values.shape
    h = template.cell
    sub = int(subsamples)
    counts = np.zeros((nrows, ncols), dtype=np.int64)
    xs = x_lo + (np.arange(ncols * sub) + 0.5) * (h / sub)
    col_of = np.arange(ncols * sub) // sub
    with np.errstate(divide="ignore", invalid="ignore"):
        slope = (xb - xa) / (yb - ya)
    for jr in range(nrows * sub):
        y = (jr + 0.5) * (h / sub)
        crossing = (ya <= y) != (yb <= y)
        if not np.any(crossing):
            continue
        xc = xa[crossing] + (y - ya[crossing]) * slope[crossing]
        xc.sort()
        inside = (np.searchsorted(xc, xs) % 2) == 1
        if inside.any():
            np.add.at(counts[jr // sub], col_of[inside], 1)
    return template.with_values(counts / float(sub * sub))


# ---------------------------------------------------------------------------
# width-curve utilities


def patch_width_curve(f: GridField, strength: float):
    """Half-width samples (s, l) of a symmetric patch field.

    Row integrals of the field divided by 2 * strength give the half-width
    at each row center; rows with no mass are dropped from the top and
    bottom but kept (as zeros) in the interior.
    """
    if strength <= 0.0:
        raise ValueError("patch strength must be positive")
    row_sum = f.values.sum(axis=1) * f.cell
    widths = row_sum / (2.0 * strength)
    occupied = np.nonzero(widths > 0.0)[0]
    if len(occupied) == 0:
        raise ValueError("field has no mass")
    lo, hi = occupied[0], occupied[-1]
    return f.x2_centers[lo : hi + 1], widths[lo : hi + 1]


def contour_from_width_curve(s, widths, touching=None) -> ContourPolygon:
    """Symmetric polygon with boundary x1 = +-l(x2).

    The curve is closed by tapering to zero half a sample spacing past each
    end, or along the wall when the bottom sample sits on the first grid row
    of a touching patch.
    """
    s = np.asarray(s, dtype=float)
    w = np.asarray(widths, dtype=float)
    if len(s) < 2:
        raise ValueError("need at least two width samples")
    ds_bot = s[1] - s[0]
    ds_top = s[-1] - s[-2]
    if touching is None:
        touching = s[0] <= 0.75 * ds_bot
    right = [(w[k], s[k]) for k in range(len(s))]
    if touching:
        bottom_s = 0.0
        bottom_w = max(w[0] + (w[0] - w[1]) * s[0] / ds_bot, 0.5 * w[0])
        right = [(bottom_w, bottom_s)] + right
    else:
        right = [(0.0, max(s[0] - 0.5 * ds_bot, 0.5 * s[0]))] + right
    right = right + [(0.0, s[-1] + 0.5 * ds_top)]
    pts = np.array(right)
    left = pts[1:-1][::-1] * np.array([-1.0, 1.0])
    if touching:
        left = np.vstack([left, [-pts[0, 0], 0.0]])
    verts = np.vstack([pts, left])
    return ContourPolygon(verts, touching=touching)


def _extract_width_curve(base: ContourPolygon):
    """Recover (s, l) samples of a symmetric polygon's right boundary."""
    verts = base.vertices
    if len(verts) < 3:
        raise ValueError("base contour is degenerate")
    span = max(1.0, float(np.abs(verts[:, 0]).max()))
    right = verts[verts[:, 0] >= -1e-9 * span]
    order = np.argsort(right[:, 1], kind="stable")
    s = right[order, 1]
    l = right[order, 0]
    keep = np.ones(len(s), dtype=bool)
    for k in range(1, len(s)):
        if s[k] - s[k - 1] < 1e-12:
            keep[k] = False
            l[k - 1] = max(l[k - 1], l[k])
    return s[keep], np.clip(l[keep], 0.0, None)


# ---------------------------------------------------------------------------
# tail perturbation


@dataclass
class TailParams:
    """Parameters of the spike-and-taper contour perturbation.

    epsilon bounds the L1 budget of the width change, tail_length is the
    target maximum half-width, the spike is centered at height spike_center
    with support radius spike_halfwidth.  The halfwidth must stay below
    epsilon, below a third of the spike center height, and below the gap
    from the spike center to the top of the base support; the last two keep
    the spike window inside the flat part of the endpoint windows.
    """

    epsilon: float
    tail_length: float
    spike_center: float
    spike_halfwidth: float

    def validate(self, support_top: float):
        if self.epsilon <= 0.0:
            raise TailParamError("epsilon must be positive")
        if self.tail_length <= 0.0:
            raise TailParamError("tail_length must be positive")
        if not 0.0 < self.spike_center < support_top:
            raise TailParamError("spike_center must lie inside the base support")
        margin = support_top - self.spike_center
        bound = min(self.epsilon, self.spike_center / 3.0, margin)
        if not 0.0 < self.spike_halfwidth < bound:
            raise TailParamError(
                "spike_halfwidth must be below min(epsilon, spike_center/3, "
                "support margin); got %g with bound %g" % (self.spike_halfwidth, bound)
            )


def _smooth_bump(t):
    """C-infinity bump exp(1 - 1/(1 - t^2)) on (-1, 1), peak value 1."""
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti * ti))
    return out


_BUMP_L1 = None


def _bump_l1() -> float:
    global _BUMP_L1
    if _BUMP_L1 is None:
        t = np.linspace(-1.0, 1.0, 20001)
        _BUMP_L1 = float(np.trapezoid(_smooth_bump(t), t))
    return _BUMP_L1


def _endpoint_taper(x):
    """Decreasing window H on [0, 1]: H(0) = 1 flat, H(1) = 0 steep.

    H(x) = sqrt(1 - exp(2 - 2/x)).  All derivatives vanish as x -> 0, so the
    window glues smoothly onto the constant 1; near x = 1 it behaves like
    sqrt(2 (1 - x)), so the tapered width curve meets zero with a vertical
    tangent and the squared width stays smooth with nonzero slope, which is
    what rounds the support endpoints into smooth caps.
    """
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    hi = x >= 1.0
    mid = (x > 0.0) & (x < 1.0)
    out[hi] = 0.0
    xm = x[mid]
    out[mid] = np.sqrt(np.clip(1.0 - np.exp(2.0 - 2.0 / xm), 0.0, 1.0))
    return out


def make_tailed_contour(base: ContourPolygon, params: TailParams) -> ContourPolygon:
    """Symmetric smooth contour with one calibrated spike and tapered caps.

    Pipeline: extract the base half-width curve l, mollify it (support
    compressed first so smoothing cannot spill past the top), multiply in a
    spike 1 + K of amplitude r and support radius shrinking like 1/r (the
    bump's L1 mass is amplitude independent and below epsilon), calibrate r
    by bisection so the curve maximum reaches tail_length - epsilon, add the
    epsilon offset, and apply the endpoint windows which move the support to
    [d, top + d] for halfwidth d and pin the final maximum to exactly
    tail_length inside the spike window.
    """
    s_base, l_base = _extract_width_curve(base)
    support_top = float(s_base[np.nonzero(l_base > 0.0)[0][-1]])
    if support_top <= 0.0:
        raise ValueError("base contour has no positive width")
    params.validate(support_top)
    eps = float(params.epsilon)
    big_l = float(params.tail_length)
    center = float(params.spike_center)
    delta = float(params.spike_halfwidth)

    # mollified base width, support kept inside [0, support_top)
    sigma = 0.5 * delta
    shrink = support_top / (support_top - 2.0 * sigma)
    ds = sigma / 10.0
    grid = np.arange(-5.0 * sigma, support_top + 5.0 * sigma, ds)
    pre = np.interp(np.abs(grid) * shrink, s_base, l_base, left=l_base[0], right=0.0)
    kt = np.arange(-sigma, sigma + 0.5 * ds, ds)
    kernel = _smooth_bump(kt / sigma)
    kernel /= kernel.sum()
    smooth = np.convolve(pre, kernel, mode="same")

    def l_eps(q):
        return np.interp(q, grid, smooth, left=0.0, right=0.0)

    # spike amplitude calibration: curve max inside the window reaches L - eps
    radius0 = min(delta, 0.8 * eps / _bump_l1())
    twin = np.linspace(-1.0, 1.0, 801)

    def spike_max(r):
        width = radius0 / max(r, 1.0)
        sw = center + width * twin
        vals = l_eps(sw) * (1.0 + r * _smooth_bump(twin))
        k = int(np.argmax(vals))
        return float(vals[k]), float(sw[k])

    target = big_l - eps
    f0, s_peak = spike_max(0.0)
    if f0 >= target:
        r_star = 0.0
    else:
        r_hi = 1.0
        while spike_max(r_hi)[0] < target:
            r_hi *= 2.0
            if r_hi > 1e9:
                raise TailParamError("tail_length unreachable from this base curve")
        r_lo = 0.0
        for _ in range(200):
            mid = 0.5 * (r_lo + r_hi)
            if spike_max(mid)[0] < target:
                r_lo = mid
            else:
                r_hi = mid
        r_star = 0.5 * (r_lo + r_hi)
        _, s_peak = spike_max(r_star)

    def spike_factor(q):
        width = radius0 / max(r_star, 1.0)
        return 1.0 + r_star * _smooth_bump((q - center) / width)

    # sample grid: caps, interior, spike window, exact peak node
    spike_w = radius0 / max(r_star, 1.0)
    nodes = np.concatenate(
        [
            np.linspace(delta, 2.0 * delta, 81),
            np.linspace(2.0 * delta, support_top, 701),
            np.linspace(support_top, support_top + delta, 81),
            np.linspace(center - 1.02 * spike_w, center + 1.02 * spike_w, 321),
            np.array([s_peak]),
        ]
    )
    nodes = np.unique(nodes)
    nodes = nodes[(nodes >= delta) & (nodes <= support_top + delta)]

    window = np.ones_like(nodes)
    low = nodes < 2.0 * delta
    window[low] = _endpoint_taper((2.0 * delta - nodes[low]) / delta)
    highz = nodes > support_top
    window[highz] = _endpoint_taper((nodes[highz] - support_top) / delta)
    widths = window * (l_eps(nodes) * spike_factor(nodes) + eps)
    widths[0] = 0.0
    widths[-1] = 0.0

    interior = widths > 0.0
    interior[0] = interior[-1] = True
    nodes, widths = nodes[interior], widths[interior]
    right = np.column_stack([widths, nodes])
    left = right[1:-1][::-1] * np.array([-1.0, 1.0])
    return ContourPolygon(np.vstack([right, left]), touching=False)


# ---------------------------------------------------------------------------
# serialization


def save_field(f: GridField, path):
    lines = [
        "origin_x1=%r cell=%r nrows=%d ncols=%d"
        % (float(f.origin_x1), float(f.cell), f.nrows, f.ncols)
    ]
    vals = f.values
    for j in range(f.nrows):
        row = vals[j]
        for i in np.nonzero(row != 0.0)[0]:
            lines.append("%d,%d,%r" % (i, j, float(row[i])))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path) -> GridField:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise FieldFormatError("empty field file")
    header = {}
    for tok in lines[0].split():
        if "=" not in tok:
            raise FieldFormatError("bad header token %r" % tok)
        key, _, val = tok.partition("=")
        header[key] = val
    try:
        origin = float(header["origin_x1"])
        cell = float(header["cell"])
        nrows = int(header["nrows"])
        ncols = int(header["ncols"])
    except (KeyError, ValueError) as exc:
        raise FieldFormatError("incomplete field header: %s" % exc) from exc
    vals = np.zeros((nrows, ncols))
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3:
            raise FieldFormatError("bad value row %r" % ln)
        i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
        if not (0 <= i < ncols and 0 <= j < nrows):
            raise FieldFormatError("cell index out of range in %r" % ln)
        vals[j, i] = v
    return GridField(origin, cell, vals)


def save_contour(contour: ContourPolygon, path):
    with open(path, "w") as fh:
        for x1, x2 in contour.vertices:
            fh.write("%r,%r\n" % (float(x1), float(x2)))


def load_contour(path) -> ContourPolygon:
    rows = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            parts = ln.split(",")
            if len(parts) != 2:
                raise FieldFormatError("bad contour row %r" % ln)
            rows.append((float(parts[0]), float(parts[1])))
    verts = np.array(rows) if rows else np.zeros((0, 2))
    touching = bool(len(verts) and verts[:, 1].min() <= 1e-12)
    return ContourPolygon(verts, touching=touching)
