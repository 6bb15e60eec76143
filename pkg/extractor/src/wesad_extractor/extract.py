"""Turn subject archives into the canonical merged feature CSV.

Per subject, per label-contiguous segment, per window: min/max/mean/std of
BVP, EDA tonic, EDA phasic, and temperature, the BVP periodogram peak, plus
age and weight. Windows whose BVP is constant are dropped and counted, as are
whole segments whose raw label has no mapping. A window length of 0 collapses
each segment into a single row of whole-segment statistics.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .archive import (
    DEFAULT_LABEL_MAP,
    LABEL_RATE_HZ,
    WRIST_RATES_HZ,
    NoMappedLabels,
    SubjectArchive,
    load_subject,
    subject_dirs,
)
from .signal_ops import median_decompose, periodogram_peak, stats_row, window_bounds

log = logging.getLogger("wesad_extractor")

DEFAULT_WINDOW_SECONDS = 30.0
DEFAULT_OVERLAP = 0.5
DEFAULT_EDA_MEDIAN_SECONDS = 4.0

FEATURE_COLUMNS = (
    [f"bvp_{s}" for s in ("min", "max", "mean", "std")]
    + [f"eda_tonic_{s}" for s in ("min", "max", "mean", "std")]
    + [f"eda_phasic_{s}" for s in ("min", "max", "mean", "std")]
    + [f"temp_{s}" for s in ("min", "max", "mean", "std")]
    + ["bvp_peak_freq", "age", "weight"]
)
HEADER = ["subject_id"] + FEATURE_COLUMNS + ["label"]


@dataclass
class ExtractionStats:
    subjects: int = 0
    rows: int = 0
    dropped_unmapped_windows: int = 0
    dropped_constant_bvp_windows: int = 0
    unmapped_raw_labels: dict = field(default_factory=dict)


def label_segments(labels: np.ndarray):
    """(raw_label, start_index, end_index) runs on the label clock."""
    change = np.flatnonzero(np.diff(labels)) + 1
    starts = np.concatenate([[0], change])
    ends = np.concatenate([change, [labels.size]])
    return [(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends)]


def _segment_slice(series: np.ndarray, rate: float, t0: float, t1: float) -> np.ndarray:
    return series[int(round(t0 * rate)):int(round(t1 * rate))]


def _bounds(n_samples, rate, window_s, overlap):
    # window_s == 0 reads the whole segment as a single window
    if window_s == 0:
        return [(0, n_samples)] if n_samples >= 2 else []
    return window_bounds(n_samples, rate, window_s, overlap)


def _window_count(length_by_channel, window_s, overlap):
    counts = [
        len(_bounds(n, rate, window_s, overlap)) for n, rate in length_by_channel
    ]
    return min(counts) if counts else 0


def extract_subject(
    archive: SubjectArchive,
    window_s: float,
    overlap: float,
    label_map: dict[int, int],
    eda_median_s: float,
    stats: ExtractionStats,
):
    """Feature rows for one subject; window arithmetic mirrors the core library."""
    rates = WRIST_RATES_HZ
    rows = []
    for raw, seg_start, seg_end in label_segments(archive.labels):
        t0 = seg_start / LABEL_RATE_HZ
        t1 = seg_end / LABEL_RATE_HZ
        channels = {
            "bvp": (_segment_slice(archive.bvp, rates["BVP"], t0, t1), rates["BVP"]),
            "eda": (_segment_slice(archive.eda, rates["EDA"], t0, t1), rates["EDA"]),
            "temp": (_segment_slice(archive.temp, rates["TEMP"], t0, t1), rates["TEMP"]),
        }
        n_windows = _window_count(
            [(v.size, r) for v, r in channels.values()], window_s, overlap
        )
        if raw not in label_map:
            if n_windows:
                stats.dropped_unmapped_windows += n_windows
                stats.unmapped_raw_labels[raw] = (
                    stats.unmapped_raw_labels.get(raw, 0) + n_windows
                )
            continue
        if n_windows == 0:
            continue
        mapped = label_map[raw]

        bvp, bvp_rate = channels["bvp"]
        eda, eda_rate = channels["eda"]
        temp, temp_rate = channels["temp"]
        tonic, phasic = median_decompose(eda, eda_rate, eda_median_s)
        bvp_b = _bounds(bvp.size, bvp_rate, window_s, overlap)
        eda_b = _bounds(eda.size, eda_rate, window_s, overlap)
        temp_b = _bounds(temp.size, temp_rate, window_s, overlap)

        for w in range(n_windows):
            b0, b1 = bvp_b[w]
            peak = periodogram_peak(bvp[b0:b1], bvp_rate)
            if peak is None:
                stats.dropped_constant_bvp_windows += 1
                continue
            e0, e1 = eda_b[w]
            t0w, t1w = temp_b[w]
            row = (
                [archive.subject_id]
                + list(stats_row(bvp[b0:b1]))
                + list(stats_row(tonic[e0:e1]))
                + list(stats_row(phasic[e0:e1]))
                + list(stats_row(temp[t0w:t1w]))
                + [peak, archive.age, archive.weight, mapped]
            )
            rows.append(row)
    return rows


def extract(
    root,
    out_path,
    window_s: float = DEFAULT_WINDOW_SECONDS,
    overlap: float = DEFAULT_OVERLAP,
    label_map: dict[int, int] | None = None,
    eda_median_s: float = DEFAULT_EDA_MEDIAN_SECONDS,
) -> ExtractionStats:
    """Extract every subject under root and write the merged canonical CSV."""
    label_map = DEFAULT_LABEL_MAP if label_map is None else dict(label_map)
    stats = ExtractionStats()
    all_rows = []
    for subject_dir in subject_dirs(Path(root)):
        archive = load_subject(subject_dir)
        rows = extract_subject(archive, window_s, overlap, label_map, eda_median_s, stats)
        stats.subjects += 1
        all_rows.extend(rows)
        log.info("%s: %d rows", archive.subject_id, len(rows))
    if not all_rows:
        raise NoMappedLabels("no window survived the label map")
    stats.rows = len(all_rows)

    with open(out_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for row in all_rows:
            formatted = [row[0]]
            formatted += [repr(float(v)) for v in row[1:-1]]
            formatted.append(str(int(row[-1])))
            writer.writerow(formatted)
    if stats.dropped_unmapped_windows:
        log.info(
            "dropped %d windows from unmapped raw labels %s",
            stats.dropped_unmapped_windows,
            dict(sorted(stats.unmapped_raw_labels.items())),
        )
    return stats
