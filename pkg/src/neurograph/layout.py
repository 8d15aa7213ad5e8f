"""Spatial input construction: electrode geometry, orderings, topographies, stacking.

Connectivity matrices are reordered by a permutation of the electrodes before
becoming CNN input; per-electrode scalars are instead rasterized onto a 2-D
head map. Both paths end in :func:`stack_bands`, which stacks the ten per-band
planes into one tensor.
"""

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .bands import BAND_INDEX, BAND_NAMES


class LayoutError(ValueError):
    """Invalid montage, ordering, or rendering input."""


TENSOR_KINDS = ("topography", "connectivity")


@dataclass
class ElectrodeMontage:
    """Electrode geometry: labels, unit-sphere positions, planar projection.

    pos2d is the azimuthal-equidistant projection from the vertex, scaled so
    the head disk (circumscribing all electrodes with a 5% margin) is the unit
    circle.
    """

    names: list
    pos3d: np.ndarray
    pos2d: np.ndarray
    hemisphere: list

    def __post_init__(self):
        n = len(self.names)
        self.pos3d = np.asarray(self.pos3d, dtype=float)
        self.pos2d = np.asarray(self.pos2d, dtype=float)
        if len(set(self.names)) != n:
            raise LayoutError("electrode labels must be unique")
        if self.pos3d.shape != (n, 3) or self.pos2d.shape != (n, 2):
            raise LayoutError("position array shapes do not match the label count")
        norms = np.linalg.norm(self.pos3d, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise LayoutError("pos3d must lie on the unit sphere")
        if np.any(np.linalg.norm(self.pos2d, axis=1) > 1.0 + 1e-9):
            raise LayoutError("pos2d must lie inside the unit disk")
        for i, h in enumerate(self.hemisphere):
            x = self.pos3d[i, 0]
            if h == "midline" and x != 0:
                raise LayoutError(f"{self.names[i]}: midline tag but lateral coordinate {x}")
            if h == "left" and x >= 0 or h == "right" and x <= 0:
                raise LayoutError(f"{self.names[i]}: hemisphere tag {h} contradicts x={x}")
            if h not in ("left", "right", "midline"):
                raise LayoutError(f"{self.names[i]}: unknown hemisphere tag {h!r}")

    @property
    def n_electrodes(self):
        return len(self.names)

    def index_of(self, name):
        return self.names.index(name)


def _project_vertex(pos3d):
    """Azimuthal equidistant projection from the vertex (+z).

    Planar radius is proportional to the polar angle from +z; direction is the
    (lateral, anterior) azimuth. Radial distances from the vertex are thereby
    preserved.
    """
    x, y, z = pos3d[:, 0], pos3d[:, 1], pos3d[:, 2]
    alpha = np.arccos(np.clip(z, -1.0, 1.0))
    hyp = np.hypot(x, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        ux = np.where(hyp > 0, x / hyp, 0.0)
        uy = np.where(hyp > 0, y / hyp, 0.0)
    r = alpha / (np.pi / 2)
    return np.column_stack([r * ux, r * uy])


def make_montage(names, pos3d, hemisphere=None, margin=0.05):
    """Build an ElectrodeMontage from labels and unit-sphere coordinates.

    Hemisphere tags default to the sign of the lateral coordinate. The planar
    projection is rescaled so the head disk (all electrodes plus ``margin``)
    becomes the unit circle.
    """
    pos3d = np.asarray(pos3d, dtype=float)
    if hemisphere is None:
        hemisphere = [
            "midline" if x == 0 else ("left" if x < 0 else "right") for x in pos3d[:, 0]
        ]
    raw2d = _project_vertex(pos3d)
    r_head = (1.0 + margin) * np.max(np.linalg.norm(raw2d, axis=1))
    return ElectrodeMontage(
        names=list(names), pos3d=pos3d, pos2d=raw2d / r_head, hemisphere=list(hemisphere)
    )


def load_montage(path=None, margin=0.05):
    """Read a montage file: ``label x y z hemisphere`` rows, '#' comments.

    With no path, the packaged 32-electrode 10-20 montage is loaded.
    """
    if path is None:
        src = resources.files("neurograph").joinpath("data/deap32_montage.txt")
        text = src.read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    names, pos, hemis = [], [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 5:
            raise LayoutError(f"montage line {lineno}: expected 'label x y z hemisphere'")
        names.append(parts[0])
        pos.append([float(v) for v in parts[1:4]])
        hemis.append(parts[4])
    if not names:
        raise LayoutError("montage file holds no electrodes")
    return make_montage(names, np.asarray(pos), hemisphere=hemis, margin=margin)


@dataclass(frozen=True)
class ElectrodeOrdering:
    """A permutation of electrode indices plus how it was produced."""

    perm: tuple
    method: str

    def __post_init__(self):
        if sorted(self.perm) != list(range(len(self.perm))):
            raise LayoutError("perm must be a permutation of 0..n-1")

    def inverse(self):
        inv = np.empty(len(self.perm), dtype=int)
        inv[list(self.perm)] = np.arange(len(self.perm))
        return ElectrodeOrdering(perm=tuple(int(i) for i in inv), method=f"inverse({self.method})")


def _greedy_path(montage, indices, start):
    """Greedy nearest-neighbour walk over ``indices`` starting at ``start``.

    Distance is 3-D euclidean; ties break on the lexicographically smaller
    label so the walk is deterministic.
    """
    remaining = set(indices)
    remaining.discard(start)
    path = [start]
    cur = start
    while remaining:
        best = None
        best_key = None
        for idx in remaining:
            d = float(np.linalg.norm(montage.pos3d[idx] - montage.pos3d[cur]))
            key = (d, montage.names[idx])
            if best_key is None or key < best_key:
                best, best_key = idx, key
        path.append(best)
        remaining.discard(best)
        cur = best
    return path


def _pick(montage, indices, anterior, prefer_lateral=True):
    """Most-anterior (or most-posterior) electrode; ties prefer lateral, then label."""
    sign = 1.0 if anterior else -1.0

    def key(idx):
        y = montage.pos3d[idx, 1]
        lat = abs(montage.pos3d[idx, 0])
        return (-sign * y, -lat if prefer_lateral else lat, montage.names[idx])

    return min(indices, key=key)


def distance_ordering(montage):
    """Hemisphere-aware nearest-neighbour electrode ordering.

    Starts at the most-anterior left-hemisphere electrode and greedily walks
    the left hemisphere front to back; resumes at the most-posterior
    right-hemisphere electrode and walks the right hemisphere back to front;
    midline electrodes are appended last, front to back.
    """
    groups = {"left": [], "right": [], "midline": []}
    for i, h in enumerate(montage.hemisphere):
        groups[h].append(i)
    if not groups["left"]:
        raise LayoutError("montage has no left-hemisphere electrodes to start from")
    perm = _greedy_path(montage, groups["left"], _pick(montage, groups["left"], anterior=True))
    if groups["right"]:
        perm += _greedy_path(
            montage, groups["right"], _pick(montage, groups["right"], anterior=False)
        )
    midline = sorted(groups["midline"], key=lambda i: (-montage.pos3d[i, 1], montage.names[i]))
    perm += midline
    return ElectrodeOrdering(perm=tuple(perm), method="distance")


def random_ordering(n, seed):
    """Uniform random permutation of ``n`` electrodes, reproducible per seed."""
    if n < 1:
        raise LayoutError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return ElectrodeOrdering(
        perm=tuple(int(i) for i in rng.permutation(n)), method=f"random({seed})"
    )


def identity_ordering(n):
    return ElectrodeOrdering(perm=tuple(range(n)), method="identity")


def apply_ordering(matrix, ordering):
    """Simultaneous row+column permutation: out[i, j] = m[perm[i], perm[j]].

    Accepts a bare square array or a ConnectivityMatrix (returned as the same
    type).
    """
    values = matrix.values if hasattr(matrix, "values") else np.asarray(matrix)
    perm = np.asarray(ordering.perm, dtype=int)
    if values.shape[0] != len(perm) or values.shape[0] != values.shape[1]:
        raise LayoutError(
            f"size mismatch: {values.shape} matrix vs permutation of {len(perm)}"
        )
    out = values[np.ix_(perm, perm)]
    if hasattr(matrix, "values"):
        from .features import ConnectivityMatrix

        return ConnectivityMatrix(values=out, kind=matrix.kind, band=matrix.band)
    return out


def idw_weights(points, nodes, power=2, eps=1e-12):
    """Inverse-distance weights of ``nodes`` at each of ``points``.

    Exact at nodes: a point within ``eps`` of a node gets weight 1 on that
    node and 0 elsewhere. Rows sum to 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nodes = np.asarray(nodes, dtype=float)
    d = np.linalg.norm(points[:, np.newaxis, :] - nodes[np.newaxis, :, :], axis=2)
    w = np.zeros((len(points), len(nodes)))
    at_node = d.min(axis=1) < eps
    w[at_node, d[at_node].argmin(axis=1)] = 1.0
    free = ~at_node
    with np.errstate(divide="ignore"):
        inv = 1.0 / d[free] ** power
    w[free] = inv / inv.sum(axis=1, keepdims=True)
    return w


def head_mask(res):
    """Boolean (res x res) mask of pixel centers inside the unit head disk."""
    coords = pixel_grid(res)
    return np.linalg.norm(coords, axis=2) <= 1.0


def pixel_grid(res):
    """Pixel-center coordinates of a res x res raster over [-1, 1]^2.

    Index [row, col, :] = (x, y); row 0 is the top of the head (y = +1 side).
    """
    centers = -1.0 + (np.arange(res) + 0.5) * (2.0 / res)
    xs, ys = np.meshgrid(centers, -centers)
    return np.stack([xs, ys], axis=2)


def render_topography(values, montage, res=32):
    """Rasterize per-electrode scalars onto a res x res head map.

    In-head pixels are inverse-distance-weighted (power 2) interpolations over
    all electrodes, exact at electrode locations; pixels outside the head disk
    are exactly zero.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (montage.n_electrodes,):
        raise LayoutError(
            f"need one value per electrode ({montage.n_electrodes}), got shape {values.shape}"
        )
    if not np.all(np.isfinite(values)):
        raise LayoutError("electrode values must be finite")
    nodes = montage.pos2d
    dists = np.linalg.norm(nodes[:, np.newaxis, :] - nodes[np.newaxis, :, :], axis=2)
    np.fill_diagonal(dists, np.inf)
    if dists.min() < 1e-9:
        pair = np.unravel_index(np.argmin(dists), dists.shape)
        raise LayoutError(
            f"electrodes {montage.names[pair[0]]} and {montage.names[pair[1]]} project "
            "to the same location"
        )
    mask = head_mask(res)
    coords = pixel_grid(res)[mask]
    img = np.zeros((res, res))
    img[mask] = idw_weights(coords, nodes) @ values
    return img


def stack_bands(planes, band_names=BAND_NAMES):
    """Stack per-band 2-D planes into a (res, res, n_bands) tensor.

    ``planes`` maps band name -> plane, or is a sequence already in canonical
    band order. Planes are re-ordered to the canonical band listing; values
    are not rescaled.
    """
    if isinstance(planes, dict):
        missing = [b for b in band_names if b not in planes]
        if missing:
            raise LayoutError(f"missing plane(s) for band(s): {missing}")
        extra = [b for b in planes if b not in band_names]
        if extra:
            raise LayoutError(f"unknown band plane(s): {extra}")
        ordered = [np.asarray(planes[b], dtype=float) for b in band_names]
    else:
        ordered = [np.asarray(p, dtype=float) for p in planes]
        if len(ordered) != len(band_names):
            raise LayoutError(f"expected {len(band_names)} planes, got {len(ordered)}")
    shape = ordered[0].shape
    for i, p in enumerate(ordered):
        if p.ndim != 2 or p.shape != shape:
            raise LayoutError(f"plane {i} has shape {p.shape}, expected {shape}")
    tensor = np.stack(ordered, axis=2)
    if not np.all(np.isfinite(tensor)):
        raise LayoutError("stacked tensor contains non-finite values")
    return tensor


@dataclass
class FeatureTensor:
    """A stacked per-band feature tensor plus how it was built."""

    values: np.ndarray
    kind: str
    ordering: ElectrodeOrdering = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.kind not in TENSOR_KINDS:
            raise LayoutError(f"kind must be one of {TENSOR_KINDS}, got {self.kind!r}")
        if self.values.ndim != 3:
            raise LayoutError("tensor must be 3-D (rows, cols, bands)")
        if not np.all(np.isfinite(self.values)):
            raise LayoutError("tensor contains non-finite values")


BAND_ORDER_INDEX = BAND_INDEX
