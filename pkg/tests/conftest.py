import numpy as np
import pytest

from intrinsics.image import Decomposition, LinearImage


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, h=12, w=12, channels=3, invalid=0.1, lo=0.05, hi=1.0):
    data = rng.uniform(lo, hi, size=(h, w, channels))
    mask = rng.random((h, w)) >= invalid
    if not mask.any():
        mask[h // 2, w // 2] = True
    return LinearImage(data, mask)


def random_decomposition(rng, h=12, w=12, cr=3, cs=1, invalid=0.1, spread=0.6):
    log_r = rng.uniform(-spread, 0.0, size=(h, w, cr))
    log_s = rng.uniform(-spread, spread, size=(h, w, cs))
    mask = rng.random((h, w)) >= invalid
    if not mask.any():
        mask[h // 2, w // 2] = True
    return Decomposition(log_r, log_s, mask)


def fd_relative_errors(loss_fn, dec, rng, n_random_dirs=3, h=1e-4):
    """Relative mismatch between analytic directional derivatives and
    central finite differences of loss_fn(dec).value.

    Probes the direction of the analytic gradient itself (no cancellation)
    plus random unit directions. For random directions the denominator is
    floored at 1% of the typical directional magnitude ||g|| / sqrt(dim),
    so benign near-orthogonal cancellation is compared at the gradient's
    own scale rather than blowing up.
    """
    base = loss_fn(dec)
    gr, gs = base.grad_log_r, base.grad_log_s
    gnorm = np.sqrt((gr**2).sum() + (gs**2).sum())
    dim = gr.size + gs.size
    dirs = []
    if gnorm > 0:
        dirs.append((gr / gnorm, gs / gnorm))
    for _ in range(n_random_dirs):
        dr = rng.standard_normal(gr.shape)
        ds = rng.standard_normal(gs.shape)
        nrm = np.sqrt((dr**2).sum() + (ds**2).sum())
        dirs.append((dr / nrm, ds / nrm))

    errs = []
    floor = max(1e-2 * gnorm / np.sqrt(dim), 1e-12)
    for dr, ds in dirs:
        analytic = float((gr * dr).sum() + (gs * ds).sum())
        plus = Decomposition(dec.log_r + h * dr, dec.log_s + h * ds, dec.mask)
        minus = Decomposition(dec.log_r - h * dr, dec.log_s - h * ds, dec.mask)
        fd = (loss_fn(plus).value - loss_fn(minus).value) / (2 * h)
        denom = max(abs(analytic), abs(fd), floor)
        errs.append(abs(analytic - fd) / denom)
    return errs
