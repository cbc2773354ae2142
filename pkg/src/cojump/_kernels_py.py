"""Pure NumPy implementations of the transform kernels.

These mirror the compiled kernels in ``_kernels_cy`` operation for
operation; the backend module picks whichever is available.  Keeping the
accumulation order identical (filter taps applied in sequence) means the
two backends agree to floating-point noise.
"""

import numpy as np

COMPILED = False


def max_usable_levels(n: int, width: int, cap: int) -> int:
    """Deepest transform level allowed for ``n`` samples with a length
    ``width`` base filter: level j needs both the equivalent filter width
    2^(j-1)(width-1)+1 <= n and 2^j <= n.  Returns 0 when even level 1
    does not fit."""
    j = 0
    while j < cap:
        wj = (1 << j) * (width - 1) + 1
        if wj > n or (1 << (j + 1)) > n:
            break
        j += 1
    return j


def modwt_forward(x, h, g, levels):
    """Circular maximal-overlap pyramid.

    Parameters
    ----------
    x : float64 array, shape (n,)
    h, g : wavelet / scaling filters (already MODWT-scaled)
    levels : int, >= 1; caller guarantees the depth fits ``n``

    Returns
    -------
    details : (levels, n) wavelet coefficients per scale
    smooth : (n,) scaling coefficients at the final level
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    width = h.shape[0]
    details = np.empty((levels, n))
    v = x.copy()
    for j in range(1, levels + 1):
        step = (1 << (j - 1)) % n
        wj = np.zeros(n)
        vj = np.zeros(n)
        for tap in range(width):
            shifted = np.roll(v, (step * tap) % n)
            wj += h[tap] * shifted
            vj += g[tap] * shifted
        details[j - 1] = wj
        v = vj
    return details, v


def subsampled_scale_sums(r1, r2, n_grids, level_cap, h, g):
    """Average per-scale cross-products over the ``n_grids`` sparse subgrids.

    Each subgrid aggregates the return series over every ``n_grids``-th
    refresh stamp, transforms the aggregate at the deepest depth its length
    supports, and accumulates cross-products of same-scale coefficients.
    Slots 0..level_cap-1 hold wavelet scales 1..level_cap; the final slot
    pools every subgrid's scaling band (for subgrids too short to transform,
    the raw cross-product).  The result is divided by ``n_grids``.
    """
    r1 = np.ascontiguousarray(r1, dtype=np.float64)
    r2 = np.ascontiguousarray(r2, dtype=np.float64)
    n = r1.shape[0]
    width = h.shape[0]
    sums = np.zeros(level_cap + 1)
    cum1 = np.concatenate(([0.0], np.cumsum(r1)))
    cum2 = np.concatenate(([0.0], np.cumsum(r2)))
    for off in range(n_grids):
        stamps = np.arange(off, n + 1, n_grids)
        if stamps.shape[0] < 2:
            continue
        a1 = cum1[stamps[1:]] - cum1[stamps[:-1]]
        a2 = cum2[stamps[1:]] - cum2[stamps[:-1]]
        m = a1.shape[0]
        depth = max_usable_levels(m, width, level_cap)
        if depth == 0:
            sums[level_cap] += a1 @ a2
            continue
        w1, v1 = modwt_forward(a1, h, g, depth)
        w2, v2 = modwt_forward(a2, h, g, depth)
        sums[:depth] += np.einsum("jk,jk->j", w1, w2)
        sums[level_cap] += v1 @ v2
    sums /= n_grids
    return sums
