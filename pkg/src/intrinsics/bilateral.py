"""Factored bistochastic smoothness operator on a spatial bilateral grid.

The dense Gaussian affinity W_ij = exp(-0.5 * ||(p_i - p_j) / sigma_p||^2)
is approximated by splatting pixels onto a coarse grid (bilinear weights,
cell edge sigma_p), blurring the grid with a separable [1, 2, 1]/4 kernel,
and slicing back. A symmetric Sinkhorn normalizer makes the induced matrix
approximately bistochastic, so the smoothness quadratic form
s^T (I - W_hat) s is (almost exactly) a graph Laplacian.

A dense brute-force construction of the same object is provided as the
reference oracle for small grids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# One [1,2,1]/4 pass per grid axis keeps the effective kernel width close
# to the target sigma_p; more passes widen it and visibly hurt agreement
# with the dense Gaussian at small sigma_p.
BLUR_PASSES = 1
DEFAULT_SINKHORN_ITERS = 20


@dataclass
class BilateralOperator:
    """Splat/blur/slice factorization with symmetric normalizer.

    Operates on vectors indexed by the valid pixels (row-major order of the
    mask). apply(s) returns W_hat @ s.
    """

    shape: tuple  # (H, W)
    mask: np.ndarray
    sigma_p: float
    grid_shape: tuple
    cells: np.ndarray  # (M, 4) flat grid cell indices per valid pixel
    weights: np.ndarray  # (M, 4) bilinear splat weights
    norm: np.ndarray  # (M,) symmetric normalizer diagonal

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    def _kernel(self, vec: np.ndarray) -> np.ndarray:
        """slice(blur(splat(vec))) without normalization."""
        gh, gw = self.grid_shape
        grid = np.bincount(
            self.cells.ravel(),
            weights=(vec[:, None] * self.weights).ravel(),
            minlength=gh * gw,
        ).reshape(gh, gw)
        for _ in range(BLUR_PASSES):
            nxt = 2.0 * grid
            nxt[:-1] += grid[1:]
            nxt[1:] += grid[:-1]
            grid = nxt / 4.0
        for _ in range(BLUR_PASSES):
            nxt = 2.0 * grid
            nxt[:, :-1] += grid[:, 1:]
            nxt[:, 1:] += grid[:, :-1]
            grid = nxt / 4.0
        flat = grid.ravel()
        return (flat[self.cells] * self.weights).sum(axis=1)

    def apply(self, s: np.ndarray) -> np.ndarray:
        """W_hat @ s for a vector over the valid pixels."""
        s = np.asarray(s, dtype=np.float64)
        if s.shape != (self.n,):
            raise ValueError(f"expected vector of length {self.n}")
        return self.norm * self._kernel(self.norm * s)


def _bilinear_splat(mask: np.ndarray, sigma_p: float):
    h, w = mask.shape
    ys, xs = np.nonzero(mask)
    u = xs / sigma_p
    v = ys / sigma_p
    i0 = np.floor(u).astype(np.int64)
    j0 = np.floor(v).astype(np.int64)
    fu = u - i0
    fv = v - j0
    gw = int(np.floor((w - 1) / sigma_p)) + 2
    gh = int(np.floor((h - 1) / sigma_p)) + 2
    cells = np.stack(
        [
            j0 * gw + i0,
            j0 * gw + i0 + 1,
            (j0 + 1) * gw + i0,
            (j0 + 1) * gw + i0 + 1,
        ],
        axis=1,
    )
    weights = np.stack(
        [(1 - fv) * (1 - fu), (1 - fv) * fu, fv * (1 - fu), fv * fu], axis=1
    )
    return (gh, gw), cells, weights


def _sinkhorn(kernel_apply, n: int, iters: int) -> np.ndarray:
    """Symmetric Sinkhorn: find diagonal d with (d K d) 1 ~= 1 via the
    damped fixpoint d <- sqrt(d / K d), then shrink so the max row sum is
    <= 1 (which makes I - W_hat exactly positive semidefinite)."""
    d = np.ones(n)
    for _ in range(iters):
        d = np.sqrt(d / np.maximum(kernel_apply(d), 1e-300))
    max_row = float(np.max(d * kernel_apply(d)))
    if max_row > 1.0:
        d /= np.sqrt(max_row)
    return d


def build_operator(dims, mask: np.ndarray = None, sigma_p: float = 8.0,
                   sinkhorn_iters: int = DEFAULT_SINKHORN_ITERS) -> BilateralOperator:
    """Build the factored operator for an (H, W) grid and validity mask."""
    if sigma_p <= 0:
        raise ValueError("sigma_p must be > 0")
    h, w = dims
    if mask is None:
        mask = np.ones((h, w), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    op = BilateralOperator(
        (h, w), mask.copy(), float(sigma_p), (0, 0),
        np.zeros((0, 4), dtype=np.int64), np.zeros((0, 4)), np.zeros(0),
    )
    if not mask.any():
        return op
    op.grid_shape, op.cells, op.weights = _bilinear_splat(mask, sigma_p)
    op.norm = _sinkhorn(op._kernel, op.n, sinkhorn_iters)
    return op


def smoothness_quadratic(op: BilateralOperator, s: np.ndarray) -> float:
    """(1/N) * s^T (I - W_hat) s over the operator's valid pixels."""
    if op.n == 0:
        return 0.0
    return float(s @ (s - op.apply(s))) / op.n


# ---------------------------------------------------------------------------
# dense reference

def dense_bistochastic(dims, mask: np.ndarray = None, sigma_p: float = 8.0,
                       sinkhorn_iters: int = DEFAULT_SINKHORN_ITERS) -> np.ndarray:
    """Exact-matrix counterpart: the Gaussian affinity over valid pixels,
    bistochastized by the same symmetric Sinkhorn procedure."""
    if sigma_p <= 0:
        raise ValueError("sigma_p must be > 0")
    h, w = dims
    if mask is None:
        mask = np.ones((h, w), dtype=bool)
    ys, xs = np.nonzero(np.asarray(mask, dtype=bool))
    p = np.stack([xs, ys], axis=1).astype(np.float64)
    d2 = ((p[:, None, :] - p[None, :, :]) ** 2).sum(axis=2)
    kernel = np.exp(-0.5 * d2 / sigma_p**2)
    d = _sinkhorn(lambda v: kernel @ v, p.shape[0], sinkhorn_iters)
    return d[:, None] * kernel * d[None, :]


def brute_force_quadratic(dims, mask: np.ndarray, sigma_p: float,
                          s: np.ndarray,
                          sinkhorn_iters: int = DEFAULT_SINKHORN_ITERS) -> float:
    """(1/2N) sum_ij W_hat_ij (s_i - s_j)^2 with the dense bistochastized
    affinity; the oracle for the factored smoothness loss (<= 32x32 grids).

    s is a vector over valid pixels (row-major), or a full (H, W) field
    from which the valid entries are taken.
    """
    if mask is None:
        mask = np.ones(tuple(dims), dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    s = np.asarray(s, dtype=np.float64)
    if s.shape == tuple(dims):
        s = s[mask]
    n = int(mask.sum())
    if n == 0:
        return 0.0
    w_hat = dense_bistochastic(dims, mask, sigma_p, sinkhorn_iters)
    diff2 = (s[:, None] - s[None, :]) ** 2
    return float((w_hat * diff2).sum()) / (2.0 * n)
