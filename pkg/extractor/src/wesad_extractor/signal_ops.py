"""Windowed statistics, periodogram peak, and tonic/phasic split.

These definitions deliberately mirror the downstream feature library so the
merged CSV matches its per-window output: full windows only with the k-th
starting at round(k * hop * rate) samples, population std, DC-excluded
|DFT|^2/N periodogram with low-frequency tie-break, and a centered moving
median whose residual sums back to the input exactly (one-ulp tie nudges).
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def window_bounds(n_samples: int, rate: float, window_s: float, overlap: float):
    length = int(round(window_s * rate))
    hop_s = window_s * (1.0 - overlap)
    bounds = []
    k = 0
    while True:
        start = int(round(k * hop_s * rate))
        if start + length > n_samples:
            break
        bounds.append((start, start + length))
        k += 1
    return bounds


def stats_row(window: np.ndarray) -> tuple[float, float, float, float]:
    return float(window.min()), float(window.max()), float(window.mean()), float(window.std())


def periodogram_peak(window: np.ndarray, rate: float) -> float | None:
    """Peak frequency in Hz, or None when the window is constant."""
    if window.size < 4 or window.max() == window.min():
        return None
    x = window - window.mean()
    power = np.abs(np.fft.rfft(x)) ** 2 / window.size
    freqs = np.fft.rfftfreq(window.size, d=1.0 / rate)
    return float(freqs[1 + int(np.argmax(power[1:]))])


def median_decompose(values: np.ndarray, rate: float, median_window_s: float):
    """(tonic, phasic) with tonic + phasic == values elementwise."""
    width = int(round(median_window_s * rate))
    half = width // 2
    n = values.size
    tonic = np.empty_like(values)
    if n >= 2 * half + 1:
        tonic[half:n - half] = np.median(sliding_window_view(values, 2 * half + 1), axis=1)
    for i in range(min(half, n)):
        tonic[i] = np.median(values[: i + half + 1])
        tonic[n - 1 - i] = np.median(values[max(0, n - 1 - i - half):])
    phasic = values - tonic
    bad = (tonic + phasic) != values
    for direction in (np.inf, -np.inf):
        if bad.any():
            nudged = np.nextafter(tonic, direction)
            fixed = bad & ((nudged + phasic) == values)
            tonic = np.where(fixed, nudged, tonic)
            bad &= ~fixed
    return tonic, phasic
