"""Per-subject WESAD archive loading.

Each subject directory SX holds SX.pkl (signals + labels) and SX_readme.txt
(age, weight, and other metadata). Wrist and chest channels run at the fixed
device rates below; the label stream aligns to the chest clock.
"""

from __future__ import annotations

import pickle
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHEST_RATE_HZ = 700.0
LABEL_RATE_HZ = 700.0
WRIST_RATES_HZ = {"ACC": 32.0, "BVP": 64.0, "EDA": 4.0, "TEMP": 4.0}

# raw condition codes: 1=baseline, 2=stress, 3=amusement
DEFAULT_LABEL_MAP = {1: 0, 2: 1, 3: 2}


class ExtractorError(Exception):
    """Base class for extractor failures."""


class MissingSubjectDir(ExtractorError):
    """Root directory holds no subject directories."""


class CorruptArchive(ExtractorError):
    """A subject archive is unreadable or structurally wrong."""


class NoMappedLabels(ExtractorError):
    """No label segment survived the label map."""


@dataclass(frozen=True)
class SubjectArchive:
    """One subject's wrist channels, label stream, and readme metadata."""

    subject_id: str
    bvp: np.ndarray
    eda: np.ndarray
    temp: np.ndarray
    labels: np.ndarray
    age: float
    weight: float


def _flat(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).reshape(-1)


def parse_readme(text: str, subject_id: str) -> tuple[float, float]:
    """Age and weight from the SX_readme.txt key:value lines."""
    age = re.search(r"^\s*age\s*:\s*([0-9.]+)", text, re.IGNORECASE | re.MULTILINE)
    weight = re.search(
        r"^\s*weight\s*(?:\(kg\))?\s*:\s*([0-9.]+)", text, re.IGNORECASE | re.MULTILINE
    )
    if not age or not weight:
        raise CorruptArchive(f"{subject_id}: readme lacks Age/Weight lines")
    return float(age.group(1)), float(weight.group(1))


def load_subject(subject_dir: Path) -> SubjectArchive:
    subject_id = subject_dir.name
    pkl_path = subject_dir / f"{subject_id}.pkl"
    readme_path = subject_dir / f"{subject_id}_readme.txt"
    try:
        with open(pkl_path, "rb") as fh:
            data = pickle.load(fh, encoding="latin1")
    except (OSError, pickle.UnpicklingError, EOFError) as exc:
        raise CorruptArchive(f"{subject_id}: cannot unpickle {pkl_path}: {exc}") from exc
    try:
        readme = readme_path.read_text(encoding="utf-8", errors="replace")
    except OSError as exc:
        raise CorruptArchive(f"{subject_id}: cannot read {readme_path}: {exc}") from exc
    age, weight = parse_readme(readme, subject_id)
    try:
        wrist = data["signal"]["wrist"]
        return SubjectArchive(
            subject_id=str(data.get("subject", subject_id)),
            bvp=_flat(wrist["BVP"]),
            eda=_flat(wrist["EDA"]),
            temp=_flat(wrist["TEMP"]),
            labels=np.asarray(data["label"], dtype=np.int64).reshape(-1),
            age=age,
            weight=weight,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptArchive(f"{subject_id}: unexpected archive structure: {exc}") from exc


def subject_dirs(root: Path) -> list[Path]:
    """Subject directories under the dataset root, sorted by numeric suffix."""
    dirs = [p for p in root.iterdir() if p.is_dir() and re.fullmatch(r"S\d+", p.name)]
    if not dirs:
        raise MissingSubjectDir(f"no S<number> subject directories under {root}")
    return sorted(dirs, key=lambda p: int(p.name[1:]))
