"""Fused per-event rate computation for the market event loop.

Writes the cumulative channel-rate vector in one pass and returns the total
rate. Compiled with numba when available; the interpreted fallback computes
the same sums in the same order.
"""

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is an optional accelerator
    njit = None


def _rate_cum(cum, v_bid, v_ask, j, d,
              has_noise, noise_mkt, noise_limit, noise_cancel,
              has_tact, tact_mkt, tact_limit, tact_cancel, weights):
    total = 0.0
    p = 0
    if has_noise:
        total += noise_mkt
        cum[0] = total
        total += noise_mkt
        cum[1] = total
        p = 2
        for k in range(d):
            total += noise_limit[k]
            cum[p + k] = total
        p += d
        for k in range(d):
            total += noise_limit[k]
            cum[p + k] = total
        p += d
        for k in range(d):
            if k >= j - 1:
                total += noise_cancel[k] * v_bid[k - j + 1]
            cum[p + k] = total
        p += d
        for k in range(d):
            if k >= j - 1:
                total += noise_cancel[k] * v_ask[k - j + 1]
            cum[p + k] = total
        p += d
    if has_tact:
        heavy_bid = 0.0
        heavy_ask = 0.0
        for k in range(d):
            heavy_bid += v_bid[k] * weights[k]
            heavy_ask += v_ask[k] * weights[k]
        total_w = heavy_bid + heavy_ask
        imb = (heavy_bid - heavy_ask) / total_w if total_w > 0.0 else 0.0
        pos = imb if imb > 0.0 else 0.0
        neg = -imb if imb < 0.0 else 0.0
        total += tact_mkt * pos
        cum[p] = total
        total += tact_mkt * neg
        cum[p + 1] = total
        p += 2
        for k in range(d):
            total += tact_limit[k] * pos
            cum[p + k] = total
        p += d
        for k in range(d):
            total += tact_limit[k] * neg
            cum[p + k] = total
        p += d
        for k in range(d):
            if k >= j - 1:
                total += tact_cancel[k] * neg * v_bid[k - j + 1]
            cum[p + k] = total
        p += d
        for k in range(d):
            if k >= j - 1:
                total += tact_cancel[k] * pos * v_ask[k - j + 1]
            cum[p + k] = total
    return total


if njit is not None:
    rate_cum = njit(cache=True)(_rate_cum)
else:  # pragma: no cover
    rate_cum = _rate_cum
