"""Dataset manifests, deterministic train/val/test splits and statistics.

The fractional rule draws test and validation fifths (round to nearest) and
leaves the remainder for training; the shuffle is a Fisher-Yates permutation
driven by a Mersenne-Twister generator seeded from ``"<seed>:<sub-dataset>"``,
so an identical (manifest, seed, rule) always produces an identical split on
any platform.  The override rule instead forces the published per-sub-dataset
counts, because the original rounding cannot be reconstructed from them.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import EmptyInputError, OverrideMismatchError, TooFewCasesError
from .nifti import inspect_header

MANIFEST_VERSION = 1
SPLIT_VERSION = 1

# published Tr/Val/Ts counts for the six metal-free sub-datasets
TABLE1_SPLITS = {
    "ABDOMEN": (21, 7, 7),
    "COLONOG": (440, 146, 145),
    "MSD_T10": (93, 31, 31),
    "KITS19": (26, 9, 9),
    "CERVIX": (24, 8, 9),
    "CLINIC": (61, 21, 21),
}

LABEL_SUFFIX = "_label"
NIFTI_EXTENSIONS = (".nii", ".nii.gz")


class SplitRule(str, Enum):
    FRACTIONAL = "fractional"
    TABLE1_OVERRIDE = "table1"


@dataclass(frozen=True)
class CaseEntry:
    case_id: str
    image_path: str
    label_path: str | None
    dims: tuple[int, int, int]
    spacing: tuple[float, float, float]

    def to_mapping(self) -> dict:
        return {
            "case_id": self.case_id,
            "image": self.image_path,
            "label": self.label_path,
            "dims": list(self.dims),
            "spacing": list(self.spacing),
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "CaseEntry":
        return cls(
            m["case_id"],
            m["image"],
            m.get("label"),
            tuple(int(v) for v in m["dims"]),
            tuple(float(v) for v in m["spacing"]),
        )


@dataclass
class Manifest:
    sub_datasets: dict[str, list[CaseEntry]]
    notes: str = ""
    version: int = MANIFEST_VERSION

    def n_cases(self) -> int:
        return sum(len(v) for v in self.sub_datasets.values())

    def to_mapping(self) -> dict:
        return {
            "version": self.version,
            "notes": self.notes,
            "sub_datasets": {
                name: [e.to_mapping() for e in entries]
                for name, entries in sorted(self.sub_datasets.items())
            },
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "Manifest":
        return cls(
            {
                name: [CaseEntry.from_mapping(e) for e in entries]
                for name, entries in m["sub_datasets"].items()
            },
            m.get("notes", ""),
            int(m.get("version", MANIFEST_VERSION)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_mapping(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Manifest":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


def _nifti_stem(name: str) -> str | None:
    for ext in NIFTI_EXTENSIONS:
        if name.endswith(ext):
            return name[: -len(ext)]
    return None


def _scan_dir(dirpath: Path, entries: list[CaseEntry], errors: list[dict]) -> None:
    files = sorted(p for p in dirpath.iterdir() if p.is_file())
    by_stem = {}
    for p in files:
        stem = _nifti_stem(p.name)
        if stem is not None:
            by_stem.setdefault(stem, p)
    seen = set()
    for stem in sorted(by_stem):
        if stem.endswith(LABEL_SUFFIX):
            continue
        path = by_stem[stem]
        if stem in seen:
            continue
        seen.add(stem)
        try:
            summary = inspect_header(path)
        except Exception as exc:  # noqa: BLE001 - every bad file is reported
            errors.append({"path": str(path), "error": type(exc).__name__, "message": str(exc)})
            continue
        label = by_stem.get(stem + LABEL_SUFFIX)
        entries.append(
            CaseEntry(stem, str(path), str(label) if label else None, summary.dims, summary.spacing)
        )


def build_manifest(root) -> tuple[Manifest, list[dict]]:
    """Scan ``<root>/<sub_dataset>/<case>.nii[.gz]`` into a manifest.

    Files named ``<case>_label.nii[.gz]`` attach to their case as label
    paths.  NIfTI files directly under the root form a sub-dataset named
    after the root directory.  Unreadable files are excluded and returned in
    the error report.
    """
    root = Path(root)
    sub_datasets: dict[str, list[CaseEntry]] = {}
    errors: list[dict] = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        entries: list[CaseEntry] = []
        _scan_dir(sub, entries, errors)
        if entries:
            sub_datasets[sub.name] = entries
    root_entries: list[CaseEntry] = []
    _scan_dir(root, root_entries, errors)
    if root_entries:
        sub_datasets[root.name] = root_entries
    return Manifest(sub_datasets), errors


@dataclass(frozen=True)
class SplitLists:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def counts(self) -> tuple[int, int, int]:
        return (len(self.train), len(self.val), len(self.test))


@dataclass
class Split:
    assignments: dict[str, SplitLists]
    seed: int
    rule: SplitRule
    version: int = SPLIT_VERSION

    def to_mapping(self) -> dict:
        return {
            "version": self.version,
            "seed": self.seed,
            "rule": self.rule.value,
            "sub_datasets": {
                name: {"train": list(s.train), "val": list(s.val), "test": list(s.test)}
                for name, s in sorted(self.assignments.items())
            },
        }

    @classmethod
    def from_mapping(cls, m: dict) -> "Split":
        return cls(
            {
                name: SplitLists(tuple(s["train"]), tuple(s["val"]), tuple(s["test"]))
                for name, s in m["sub_datasets"].items()
            },
            int(m["seed"]),
            SplitRule(m["rule"]),
            int(m.get("version", SPLIT_VERSION)),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_mapping(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Split":
        return cls.from_mapping(json.loads(Path(path).read_text(encoding="utf-8")))


def _shuffled(case_ids: list[str], seed: int, sub_name: str) -> list[str]:
    # explicit Fisher-Yates over a string-seeded Mersenne Twister: stable
    # across Python versions and platforms
    order = sorted(case_ids)
    rng = random.Random(f"{seed}:{sub_name}")
    for i in range(len(order) - 1, 0, -1):
        j = rng.randrange(i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def _fractional_counts(n: int) -> tuple[int, int, int]:
    n_test = round(n / 5)
    n_val = round(n / 5)
    return (n - n_val - n_test, n_val, n_test)


def split(manifest: Manifest, seed: int, rule: SplitRule) -> Split:
    """Deterministic per-sub-dataset partition into train/val/test."""
    assignments = {}
    for name, entries in sorted(manifest.sub_datasets.items()):
        n = len(entries)
        if n < 3:
            raise TooFewCasesError(f"{name}: {n} case(s), need at least 3 to split")
        if rule is SplitRule.TABLE1_OVERRIDE and name in TABLE1_SPLITS:
            n_train, n_val, n_test = TABLE1_SPLITS[name]
            if n_train + n_val + n_test != n:
                raise OverrideMismatchError(
                    f"{name}: published counts {TABLE1_SPLITS[name]} sum to "
                    f"{n_train + n_val + n_test}, manifest has {n}"
                )
        else:
            n_train, n_val, n_test = _fractional_counts(n)
        order = _shuffled([e.case_id for e in entries], seed, name)
        assignments[name] = SplitLists(
            tuple(sorted(order[:n_train])),
            tuple(sorted(order[n_train : n_train + n_val])),
            tuple(sorted(order[n_train + n_val :])),
        )
    return Split(assignments, seed, rule)


@dataclass(frozen=True)
class SubDatasetStats:
    count: int
    mean_spacing: tuple[float, float, float]
    mean_dims: tuple[float, float, float]


def dataset_stats(manifest: Manifest) -> dict[str, SubDatasetStats]:
    """Per-sub-dataset case count plus mean spacing and mean grid size."""
    if manifest.n_cases() == 0:
        raise EmptyInputError("manifest has no cases")
    stats = {}
    for name, entries in sorted(manifest.sub_datasets.items()):
        if not entries:
            continue
        n = len(entries)
        mean_sp = tuple(sum(e.spacing[a] for e in entries) / n for a in range(3))
        mean_dims = tuple(sum(e.dims[a] for e in entries) / n for a in range(3))
        stats[name] = SubDatasetStats(n, mean_sp, mean_dims)
    return stats
