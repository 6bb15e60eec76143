"""Fabricated miniature WESAD-style archive used across the extractor tests."""

from __future__ import annotations

import pickle
from pathlib import Path

import numpy as np
import pytest

from wesad_extractor.archive import LABEL_RATE_HZ, WRIST_RATES_HZ

# (raw label, duration seconds) per subject; raw 4 (meditation) is unmapped
SUBJECT_PLANS = {
    "S2": {"age": 27, "weight": 80, "segments": [(1, 120.0), (2, 80.0), (4, 45.0), (3, 60.0)]},
    "S3": {"age": 31, "weight": 64, "segments": [(1, 90.0), (3, 75.0), (2, 65.0)]},
}


def _wrist_signal(rng, rate, duration, kind, seg_index):
    n = int(round(duration * rate))
    t = np.arange(n) / rate
    if kind == "BVP":
        heart_hz = 1.1 + 0.15 * seg_index
        base = np.sin(2 * np.pi * heart_hz * t) + 0.3 * np.sin(2 * np.pi * 0.25 * t)
        return base + 0.05 * rng.standard_normal(n)
    if kind == "EDA":
        level = 4.5 + 0.6 * seg_index
        signal = level + 0.2 * rng.random(n)
        spikes = rng.integers(0, n, max(2, n // 120))
        signal[spikes] += rng.random(spikes.size) * 3.0
        return signal
    # TEMP: slow drift around skin temperature
    return 33.0 + 0.4 * seg_index + 0.01 * np.cumsum(rng.standard_normal(n))


def fabricate_archive(root: Path) -> Path:
    """Write the deterministic 2-subject archive under root and return root."""
    for subject_id, plan in SUBJECT_PLANS.items():
        rng = np.random.default_rng(int(subject_id[1:]))
        subject_dir = root / subject_id
        subject_dir.mkdir(parents=True, exist_ok=True)
        labels = []
        chunks = {"BVP": [], "EDA": [], "TEMP": [], "ACC": []}
        for seg_index, (raw, duration) in enumerate(plan["segments"]):
            labels.append(np.full(int(round(duration * LABEL_RATE_HZ)), raw, dtype=np.int64))
            for kind in ("BVP", "EDA", "TEMP"):
                chunks[kind].append(
                    _wrist_signal(rng, WRIST_RATES_HZ[kind], duration, kind, seg_index)
                )
            n_acc = int(round(duration * WRIST_RATES_HZ["ACC"]))
            chunks["ACC"].append(rng.standard_normal((n_acc, 3)))
        payload = {
            "subject": subject_id,
            "signal": {
                "chest": {},
                "wrist": {
                    "BVP": np.concatenate(chunks["BVP"])[:, None],
                    "EDA": np.concatenate(chunks["EDA"])[:, None],
                    "TEMP": np.concatenate(chunks["TEMP"])[:, None],
                    "ACC": np.vstack(chunks["ACC"]),
                },
            },
            "label": np.concatenate(labels),
        }
        with open(subject_dir / f"{subject_id}.pkl", "wb") as fh:
            pickle.dump(payload, fh, protocol=2)
        (subject_dir / f"{subject_id}_readme.txt").write_text(
            "### Personal information ###\n"
            f"Age: {plan['age']}\n"
            "Height (cm): 175\n"
            f"Weight (kg): {plan['weight']}\n"
            "Gender: female\n",
            encoding="utf-8",
        )
    return root


@pytest.fixture()
def archive_root(tmp_path):
    return fabricate_archive(tmp_path / "wesad")
