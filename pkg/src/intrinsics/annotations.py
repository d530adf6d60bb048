"""Sparse supervision: ordinal reflectance judgments, shading annotations,
judgment augmentation, point dilation, superpixels, and ordinal-pair
sampling from dense ground truth.

Point coordinates are (x, y) integers; flat pixel indices are row-major
(y * width + x).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .image import LinearImage, intensity
from .io import atomic_write_bytes


@dataclass(frozen=True)
class OrdinalJudgment:
    """Pairwise darker/equal reflectance relation.

    relation: +1 means point j is darker, -1 means point i is darker,
    0 means equal reflectance. weight is the annotation confidence.
    """

    point_i: tuple
    point_j: tuple
    relation: int
    weight: float = 1.0

    def __post_init__(self):
        if self.relation not in (-1, 0, 1):
            raise ValueError(f"bad relation {self.relation}")
        if self.weight < 0:
            raise ValueError("weight must be >= 0")


@dataclass
class OrdinalJudgmentSet:
    image: str
    pairs: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


@dataclass
class SawAnnotationSet:
    """Constant-shading regions plus shadow-boundary and depth/normal
    discontinuity points."""

    smooth_regions: list = field(default_factory=list)  # lists of flat indices
    shadow_points: list = field(default_factory=list)  # (x, y) tuples
    discontinuity_points: list = field(default_factory=list)


@dataclass
class SuperpixelLabels:
    labels: np.ndarray  # (H, W) int segment ids, 0..count-1
    count: int


# ---------------------------------------------------------------------------
# JSON serialization (schemas documented in the README)

def load_judgments(path) -> OrdinalJudgmentSet:
    with open(path) as f:
        obj = json.load(f)
    pairs = [
        OrdinalJudgment(tuple(p["i"]), tuple(p["j"]), int(p["rel"]),
                        float(p.get("w", 1.0)))
        for p in obj["pairs"]
    ]
    return OrdinalJudgmentSet(obj.get("image", ""), pairs)


def dump_judgments(js: OrdinalJudgmentSet) -> str:
    pairs = [
        {"i": list(p.point_i), "j": list(p.point_j), "rel": p.relation,
         "w": p.weight}
        for p in js.pairs
    ]
    return json.dumps({"image": js.image, "pairs": pairs}, indent=1,
                      sort_keys=True)


def save_judgments(js: OrdinalJudgmentSet, path) -> None:
    atomic_write_bytes(path, dump_judgments(js).encode())


def load_saw(path) -> SawAnnotationSet:
    with open(path) as f:
        obj = json.load(f)
    return SawAnnotationSet(
        [list(map(int, r)) for r in obj.get("smooth_regions", [])],
        [tuple(p) for p in obj.get("shadow_points", [])],
        [tuple(p) for p in obj.get("discontinuity_points", [])],
    )


def dump_saw(saw: SawAnnotationSet) -> str:
    return json.dumps(
        {
            "smooth_regions": [list(r) for r in saw.smooth_regions],
            "shadow_points": [list(p) for p in saw.shadow_points],
            "discontinuity_points": [list(p) for p in saw.discontinuity_points],
        },
        indent=1, sort_keys=True,
    )


def save_saw(saw: SawAnnotationSet, path) -> None:
    atomic_write_bytes(path, dump_saw(saw).encode())


# ---------------------------------------------------------------------------
# point dilation

def dilate_points(points, radius: float, dims) -> np.ndarray:
    """Union of Euclidean disks (distance <= radius) around each (x, y)
    point, clipped to an (H, W) grid. Returns a boolean mask."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    h, w = dims
    mask = np.zeros((h, w), dtype=bool)
    r = int(math.floor(radius))
    offs = [
        (dy, dx)
        for dy in range(-r, r + 1)
        for dx in range(-r, r + 1)
        if dx * dx + dy * dy <= radius * radius
    ]
    for x, y in points:
        for dy, dx in offs:
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w:
                mask[yy, xx] = True
    return mask


# ---------------------------------------------------------------------------
# judgment augmentation (symmetry + equality components + transitivity)

def augment_judgments(judgments: OrdinalJudgmentSet) -> OrdinalJudgmentSet:
    """Close a judgment set under symmetry, equality propagation and
    transitivity of the darker-than relation.

    Equality edges merge points into components; "A darker than B" is lifted
    to components and closed transitively to a fixpoint. Inferred judgments
    carry the minimum weight of their contributing judgments (equality hops
    discount by the component's minimum equality weight). Component pairs
    for which both directions are derivable yield no inferred judgments;
    the originals are always kept verbatim.
    """
    pairs = list(judgments.pairs)
    points = sorted({p.point_i for p in pairs} | {p.point_j for p in pairs})
    index = {pt: k for k, pt in enumerate(points)}

    parent = list(range(len(points)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for p in pairs:
        if p.relation == 0:
            ra, rb = find(index[p.point_i]), find(index[p.point_j])
            if ra != rb:
                parent[ra] = rb

    comp_points = {}
    for pt, k in index.items():
        comp_points.setdefault(find(k), []).append(pt)
    eq_weight = {}
    for p in pairs:
        if p.relation == 0:
            r = find(index[p.point_i])
            eq_weight[r] = min(eq_weight.get(r, math.inf), p.weight)

    # darker[(a, b)] = w means "every point of component a is darker than
    # every point of component b with confidence w"
    darker = {}
    for p in pairs:
        if p.relation == 0:
            continue
        a, b = find(index[p.point_i]), find(index[p.point_j])
        if p.relation == +1:
            a, b = b, a  # +1: j darker
        if a == b:
            continue  # contradicts an equality edge; originals keep it
        key = (a, b)
        darker[key] = max(darker.get(key, 0.0), p.weight)

    changed = True
    while changed:
        changed = False
        items = sorted(darker.items())
        by_src = {}
        for (a, b), w in items:
            by_src.setdefault(a, []).append((b, w))
        for (a, b), w1 in items:
            for c, w2 in by_src.get(b, []):
                if a != c and (a, c) not in darker:
                    darker[(a, c)] = min(w1, w2)
                    changed = True

    conflicted = {(a, b) for (a, b) in darker if (b, a) in darker}

    existing = {(p.point_i, p.point_j, p.relation) for p in pairs}
    inferred = []

    def emit(pi, pj, rel, w):
        if (pi, pj, rel) not in existing:
            existing.add((pi, pj, rel))
            inferred.append(OrdinalJudgment(pi, pj, rel, w))

    for root, members in comp_points.items():
        if len(members) < 2:
            continue
        w = eq_weight.get(root, math.inf)
        for a in members:
            for b in members:
                if a != b:
                    emit(a, b, 0, w)

    def hop_weight(root):
        if len(comp_points.get(root, ())) > 1:
            return eq_weight.get(root, math.inf)
        return math.inf

    for (a, b), w in sorted(darker.items()):
        if (a, b) in conflicted:
            continue
        wab = min(w, hop_weight(a), hop_weight(b))
        for pa in comp_points[a]:
            for pb in comp_points[b]:
                emit(pa, pb, -1, wab)  # pa darker than pb
                emit(pb, pa, +1, wab)

    inferred.sort(key=lambda p: (p.point_i, p.point_j, p.relation))
    return OrdinalJudgmentSet(judgments.image, pairs + inferred)


# ---------------------------------------------------------------------------
# SLIC-style superpixels

def _seed_grid(h: int, w: int, k: int):
    g = math.sqrt(h * w / k)
    rows = max(1, round(h / g))
    cols = max(1, round(k / rows))
    ys = (np.arange(rows) + 0.5) * h / rows - 0.5
    xs = (np.arange(cols) + 0.5) * w / cols - 0.5
    return ys, xs


def slic_superpixels(img: LinearImage, k: int, compactness: float = 0.1,
                     iters: int = 10) -> SuperpixelLabels:
    """Grid-seeded k-means over (color, x, y) with the spatially scaled
    distance D^2 = d_color^2 + (m / G)^2 * d_xy^2, G = sqrt(HW/K), followed
    by connectivity enforcement (orphan components merge into the largest
    adjacent segment). Deterministic: no RNG is involved.
    """
    if k < 1:
        raise ValueError("K must be >= 1")
    h, w = img.height, img.width
    k = min(k, h * w)
    g = math.sqrt(h * w / k)
    spatial_scale = compactness / g

    ys, xs = _seed_grid(h, w, k)
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    seed_y, seed_x = yy.ravel(), xx.ravel()
    seed_py = np.clip(np.round(seed_y).astype(int), 0, h - 1)
    seed_px = np.clip(np.round(seed_x).astype(int), 0, w - 1)

    py, px = np.mgrid[:h, :w]
    feats = np.concatenate(
        [
            img.data.reshape(h * w, img.channels),
            (px.reshape(-1, 1)) * spatial_scale,
            (py.reshape(-1, 1)) * spatial_scale,
        ],
        axis=1,
    )
    centers = np.concatenate(
        [
            img.data[seed_py, seed_px],
            seed_x[:, None] * spatial_scale,
            seed_y[:, None] * spatial_scale,
        ],
        axis=1,
    )

    labels = np.zeros(h * w, dtype=np.int64)
    for _ in range(iters):
        d2 = ((feats[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = np.argmin(d2, axis=1)
        for c in range(centers.shape[0]):
            sel = labels == c
            if sel.any():
                centers[c] = feats[sel].mean(axis=0)

    labels = labels.reshape(h, w)
    labels = _enforce_connectivity(labels)
    return SuperpixelLabels(labels, int(labels.max()) + 1)


def _enforce_connectivity(labels: np.ndarray) -> np.ndarray:
    """Keep each label's largest 4-connected component; merge every other
    component into the adjacent kept segment with the most pixels."""
    h, w = labels.shape
    comp = np.full((h, w), -1, dtype=np.int64)
    comp_label = []
    comp_size = []
    comp_min_idx = []
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    next_id = 0
    for lbl in np.unique(labels):
        cc, n = ndimage.label(labels == lbl, structure=structure)
        for c in range(1, n + 1):
            sel = cc == c
            comp[sel] = next_id
            comp_label.append(lbl)
            comp_size.append(int(sel.sum()))
            comp_min_idx.append(int(np.flatnonzero(sel.ravel())[0]))
            next_id += 1

    # per label, the largest component wins (ties: earliest in raster order)
    main = set()
    best = {}
    for cid in range(next_id):
        key = comp_label[cid]
        cand = (-comp_size[cid], comp_min_idx[cid], cid)
        if key not in best or cand < best[key]:
            best[key] = cand
    main = {cand[2] for cand in best.values()}

    assigned = np.where(np.isin(comp, sorted(main)), comp, -1)
    orphans = sorted(
        (cid for cid in range(next_id) if cid not in main),
        key=lambda c: comp_min_idx[c],
    )
    pending = list(orphans)
    while pending:
        progress = False
        remaining = []
        for cid in pending:
            sel = comp == cid
            neigh = np.zeros_like(sel)
            neigh[1:, :] |= sel[:-1, :]
            neigh[:-1, :] |= sel[1:, :]
            neigh[:, 1:] |= sel[:, :-1]
            neigh[:, :-1] |= sel[:, 1:]
            neigh &= ~sel
            cand = assigned[neigh]
            cand = cand[cand >= 0]
            if cand.size == 0:
                remaining.append(cid)
                continue
            ids, counts = np.unique(cand, return_counts=True)
            sizes = np.array([(assigned == i).sum() for i in ids])
            target = ids[np.lexsort((ids, -sizes))][0]
            assigned[sel] = target
            progress = True
        if not progress:
            # isolated islands of orphans: promote the first one
            cid = remaining[0]
            assigned[comp == cid] = cid
            remaining = remaining[1:]
        pending = remaining

    # relabel consecutively by first occurrence in raster order
    out = np.zeros_like(assigned)
    mapping = {}
    flat = assigned.ravel()
    for idx in range(flat.size):
        v = flat[idx]
        if v not in mapping:
            mapping[v] = len(mapping)
    for v, nv in mapping.items():
        out[assigned == v] = nv
    return out


# ---------------------------------------------------------------------------
# ordinal pair sampling from dense ground truth

def sample_cgi_ordinals(gt_reflectance: LinearImage, labels: SuperpixelLabels,
                        seed: int, equal_delta: float = 0.10,
                        image_name: str = "") -> OrdinalJudgmentSet:
    """Pick one random valid pixel per segment (seeded) and relate every
    pair by the ground-truth intensity ratio: equal when
    max(ri, rj) / min(ri, rj) < 1 + equal_delta, else the darker side wins.
    All weights are 1. Segments without valid pixels are skipped.
    """
    h, w = labels.labels.shape
    rng = np.random.default_rng(seed)
    inten = intensity(gt_reflectance).data[:, :, 0]
    chosen = []
    for seg in range(labels.count):
        flat = np.flatnonzero((labels.labels == seg).ravel()
                              & gt_reflectance.mask.ravel())
        if flat.size == 0:
            continue
        idx = int(flat[rng.integers(flat.size)])
        chosen.append((idx % w, idx // w))

    pairs = []
    for a in range(len(chosen)):
        for b in range(a + 1, len(chosen)):
            (xi, yi), (xj, yj) = chosen[a], chosen[b]
            ri = max(inten[yi, xi], 1e-10)
            rj = max(inten[yj, xj], 1e-10)
            if max(ri, rj) / min(ri, rj) < 1.0 + equal_delta:
                rel = 0
            elif ri < rj:
                rel = -1  # i darker
            else:
                rel = +1  # j darker
            pairs.append(OrdinalJudgment((xi, yi), (xj, yj), rel, 1.0))
    return OrdinalJudgmentSet(image_name, pairs)
