"""Physiological time-series features.

Windowed summary statistics, periodogram peak frequency, a moving-median
tonic/phasic split for electrodermal activity, ECG heart-rate formulas, and
the combined per-window feature extractor that feeds the dataset layer.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .datamodel import FeatureSchema
from .errors import (
    ConstantSignal,
    DuplicateFeatureName,
    InvalidSpec,
    MismatchedDuration,
    NonPositiveInput,
    SeriesTooShort,
    WindowTooSmall,
)

BVP_CHANNEL = "bvp"
EDA_CHANNEL = "eda"
DEFAULT_EDA_MEDIAN_SECONDS = 4.0


@dataclass(frozen=True)
class SignalSeries:
    """A uniformly sampled channel."""

    values: np.ndarray
    sampling_rate_hz: float
    channel_name: str

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise SeriesTooShort(f"{self.channel_name}: series must be 1-D and non-empty")
        if not np.all(np.isfinite(v)):
            raise InvalidSpec(f"{self.channel_name}: series contains non-finite values")
        if not self.sampling_rate_hz > 0:
            raise InvalidSpec(f"{self.channel_name}: sampling rate must be positive")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def n_samples(self) -> int:
        return self.values.size

    @property
    def duration_seconds(self) -> float:
        return self.n_samples / self.sampling_rate_hz


@dataclass(frozen=True)
class WindowConfig:
    """Window length and overlap used by all windowed operations."""

    window_seconds: float
    overlap_fraction: float = 0.0

    def __post_init__(self):
        if not self.window_seconds > 0:
            raise InvalidSpec("window_seconds must be positive")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise InvalidSpec("overlap_fraction must be in [0,1)")

    @property
    def hop_seconds(self) -> float:
        return self.window_seconds * (1.0 - self.overlap_fraction)


@dataclass(frozen=True)
class WindowStats:
    min: float
    max: float
    mean: float
    std: float


@dataclass(frozen=True)
class EdaDecomposition:
    """Tonic (slow baseline) and phasic (fast response) split of an EDA series.

    tonic + phasic reproduces the input elementwise.
    """

    tonic: np.ndarray
    phasic: np.ndarray
    median_window_seconds: float


@dataclass(frozen=True)
class FeatureMatrix:
    """Unlabeled per-window feature vectors plus their schema."""

    x: np.ndarray
    schema: FeatureSchema
    dropped_windows: int


def _window_bounds(n_samples: int, rate: float, cfg: WindowConfig) -> list[tuple[int, int]]:
    """Full windows only; the k-th starts at round(k * hop * rate) samples."""
    length = int(round(cfg.window_seconds * rate))
    if length < 2:
        raise WindowTooSmall(
            f"window of {cfg.window_seconds}s spans {length} sample(s) at {rate}Hz; need >= 2"
        )
    bounds = []
    k = 0
    while True:
        start = int(round(k * cfg.hop_seconds * rate))
        if start + length > n_samples:
            break
        bounds.append((start, start + length))
        k += 1
    return bounds


def window_stats(s: SignalSeries, cfg: WindowConfig) -> list[WindowStats]:
    """Min/max/mean/population-std for every full window of the series."""
    table = _window_stats_table(s, cfg)
    return [WindowStats(*row) for row in table]


def _window_stats_table(s: SignalSeries, cfg: WindowConfig) -> np.ndarray:
    bounds = _window_bounds(s.n_samples, s.sampling_rate_hz, cfg)
    if not bounds:
        raise SeriesTooShort(
            f"{s.channel_name}: {s.n_samples} samples cannot fill one "
            f"{cfg.window_seconds}s window at {s.sampling_rate_hz}Hz"
        )
    out = np.empty((len(bounds), 4))
    for i, (a, b) in enumerate(bounds):
        w = s.values[a:b]
        out[i] = (w.min(), w.max(), w.mean(), w.std())
    return out


def periodogram_peak_frequency(s: SignalSeries) -> float:
    """Frequency (Hz) of the largest periodogram bin, DC excluded.

    The periodogram is |DFT|^2 / N of the mean-removed series; ties resolve
    to the lower frequency.
    """
    if s.n_samples < 4:
        raise SeriesTooShort(f"{s.channel_name}: need >= 4 samples, got {s.n_samples}")
    v = s.values
    if v.max() == v.min():
        raise ConstantSignal(f"{s.channel_name}: periodogram peak undefined on a constant series")
    x = v - v.mean()
    power = np.abs(np.fft.rfft(x)) ** 2 / s.n_samples
    freqs = np.fft.rfftfreq(s.n_samples, d=1.0 / s.sampling_rate_hz)
    peak = 1 + int(np.argmax(power[1:]))  # argmax takes the first max: lowest frequency
    return float(freqs[peak])


def _median_filter(values: np.ndarray, width: int) -> np.ndarray:
    half = width // 2
    n = values.size
    tonic = np.empty_like(values)
    if n >= 2 * half + 1:
        tonic[half:n - half] = np.median(sliding_window_view(values, 2 * half + 1), axis=1)
    for i in range(min(half, n)):
        tonic[i] = np.median(values[: i + half + 1])
        tonic[n - 1 - i] = np.median(values[max(0, n - 1 - i - half):])
    return tonic


def decompose_eda(s: SignalSeries, median_window_seconds: float) -> EdaDecomposition:
    """Split an EDA series into tonic (moving median) and phasic (residual).

    The median window is centered and shrinks at the edges. Where the float
    subtraction leaves tonic + phasic one rounding tie away from the input,
    tonic is nudged by a single ulp so the pair sums back exactly.
    """
    width = int(round(median_window_seconds * s.sampling_rate_hz))
    if width < 3:
        raise WindowTooSmall(
            f"median window of {median_window_seconds}s spans {width} sample(s) "
            f"at {s.sampling_rate_hz}Hz; need >= 3"
        )
    v = s.values
    tonic = _median_filter(v, width)
    phasic = v - tonic
    bad = (tonic + phasic) != v
    for direction in (np.inf, -np.inf):
        if bad.any():
            nudged = np.nextafter(tonic, direction)
            fixed = bad & ((nudged + phasic) == v)
            tonic = np.where(fixed, nudged, tonic)
            bad &= ~fixed
    tonic.flags.writeable = False
    phasic.flags.writeable = False
    return EdaDecomposition(tonic, phasic, median_window_seconds)


def heart_rate_regular(n_large_squares: float) -> float:
    """Beats per minute for a regular rhythm: 300 over the large-square count."""
    if not n_large_squares > 0:
        raise NonPositiveInput(f"large-square count must be positive, got {n_large_squares}")
    return 300.0 / n_large_squares


def heart_rate_irregular(r_peaks_in_6s: int) -> float:
    """Beats per minute for an irregular rhythm: 10 times the R-peak count in 6s."""
    if r_peaks_in_6s < 0:
        raise NonPositiveInput(f"R-peak count must be >= 0, got {r_peaks_in_6s}")
    return 10.0 * r_peaks_in_6s


def extract_features(
    channels: list[SignalSeries],
    cfg: WindowConfig,
    age: float,
    weight: float,
    median_window_seconds: float = DEFAULT_EDA_MEDIAN_SECONDS,
) -> FeatureMatrix:
    """Per-window feature vectors across all channels.

    Each channel contributes min/max/mean/std per window. A channel named
    ``bvp`` additionally contributes its periodogram peak frequency (windows
    where it is constant are dropped and counted). A channel named ``eda``
    additionally contributes tonic and phasic min/max/mean/std. Age and weight
    repeat on every row.
    """
    if not channels:
        raise InvalidSpec("need at least one channel")
    names = [c.channel_name.lower() for c in channels]
    if len(set(names)) != len(names):
        raise DuplicateFeatureName(f"duplicate channel names: {sorted(names)}")
    if not (np.isfinite(age) and np.isfinite(weight)):
        raise InvalidSpec("age and weight must be finite")

    durations = [c.duration_seconds for c in channels]
    slack = 1.0 / min(c.sampling_rate_hz for c in channels)
    if max(durations) - min(durations) > slack:
        raise MismatchedDuration(
            f"channel durations differ by more than one sample: {dict(zip(names, durations))}"
        )

    per_channel_bounds = [
        _window_bounds(c.n_samples, c.sampling_rate_hz, cfg) for c in channels
    ]
    n_windows = min(len(b) for b in per_channel_bounds)
    if n_windows == 0:
        raise SeriesTooShort("no channel fits a single full window")

    columns: list[np.ndarray] = []
    col_names: list[str] = []

    def add_stats(prefix: str, values: np.ndarray, bounds) -> None:
        stats = np.empty((n_windows, 4))
        for i, (a, b) in enumerate(bounds[:n_windows]):
            w = values[a:b]
            stats[i] = (w.min(), w.max(), w.mean(), w.std())
        columns.append(stats)
        col_names.extend(f"{prefix}_{stat}" for stat in ("min", "max", "mean", "std"))

    for ch, name, bounds in zip(channels, names, per_channel_bounds):
        add_stats(name, ch.values, bounds)

    keep = np.ones(n_windows, dtype=bool)
    if BVP_CHANNEL in names:
        pos = names.index(BVP_CHANNEL)
        bvp = channels[pos]
        bounds = per_channel_bounds[pos]
        peaks = np.empty((n_windows, 1))
        for i, (a, b) in enumerate(bounds[:n_windows]):
            window = SignalSeries(bvp.values[a:b], bvp.sampling_rate_hz, BVP_CHANNEL)
            try:
                peaks[i, 0] = periodogram_peak_frequency(window)
            except ConstantSignal:
                keep[i] = False
                peaks[i, 0] = np.nan
        columns.append(peaks)
        col_names.append("bvp_peak_freq")

    if EDA_CHANNEL in names:
        pos = names.index(EDA_CHANNEL)
        eda = channels[pos]
        decomp = decompose_eda(eda, median_window_seconds)
        bounds = per_channel_bounds[pos]
        add_stats("eda_tonic", decomp.tonic, bounds)
        add_stats("eda_phasic", decomp.phasic, bounds)

    columns.append(np.full((n_windows, 1), float(age)))
    col_names.append("age")
    columns.append(np.full((n_windows, 1), float(weight)))
    col_names.append("weight")

    x = np.hstack(columns)[keep]
    if x.shape[0] == 0:
        raise SeriesTooShort("every window was dropped (constant bvp in each)")
    schema = FeatureSchema(tuple(col_names))
    return FeatureMatrix(x, schema, int(n_windows - x.shape[0]))
