"""Corpus curation: small-particle removal, empty-image pruning, stratified split."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .annotations import Annotation, shape_metrics
from .errors import DegeneratePolygon, InvalidConfig, MalformedInput
from .porometry import PoreEstimate
from .rng import SplitMix64

log = logging.getLogger(__name__)


class FilterType(Enum):
    SI_1UM = "Si1um"
    SI_10UM = "Si10um"
    CRATE_STRAIGHT = "CrateStraight"
    CRATE_SKEWED = "CrateSkewed"


@dataclass
class DatasetEntry:
    image_id: str
    filter_type: FilterType
    image_path: str
    label_path: str = ""
    annotations: list[Annotation] = field(default_factory=list)
    pore: PoreEstimate | None = None


@dataclass(frozen=True)
class SplitResult:
    train: list[str]
    val: list[str]
    test: list[str]


class SizeFilterMode(Enum):
    MAX_DIM = "max_dim"  # keep if the longer rect side clears the threshold
    MIN_DIM = "min_dim"  # keep only if even the shorter side clears it


@dataclass(frozen=True)
class SizeFilterRule:
    factor: float = 0.6
    mode: SizeFilterMode = SizeFilterMode.MAX_DIM

    def __post_init__(self):
        if self.factor <= 0:
            raise InvalidConfig("size-filter factor must be positive")


def filter_small_particles(
    annots: list[Annotation],
    pore_diagonal: float,
    rule: SizeFilterRule = SizeFilterRule(),
    image_dims: tuple[int, int] = (1024, 1024),
) -> tuple[list[Annotation], int]:
    """Drop annotations smaller than factor x pore_diagonal.

    Returns (kept annotations in original order, removed count). Degenerate
    polygons are dropped with a warning rather than aborting the corpus.
    """
    if pore_diagonal <= 0:
        raise InvalidConfig("pore diagonal must be positive")
    threshold = rule.factor * pore_diagonal
    width, height = image_dims
    kept: list[Annotation] = []
    removed = 0
    for a in annots:
        try:
            m = shape_metrics(a.polygon, width, height)
        except DegeneratePolygon:
            log.warning("dropping degenerate polygon (category %d)", a.category_id)
            removed += 1
            continue
        dim = m.length_px if rule.mode is SizeFilterMode.MAX_DIM else m.width_px
        if dim >= threshold:
            kept.append(a)
        else:
            removed += 1
    return kept, removed


def prune_empty_images(index: list[DatasetEntry]) -> list[DatasetEntry]:
    """Keep exactly the entries that still have at least one annotation."""
    return [e for e in index if e.annotations]


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def _largest_remainder(quotas: list[float], total: int) -> list[int]:
    """Apportion `total` across strata proportionally to `quotas`.

    Floor each quota, then hand out the remaining units by descending
    fractional part (ties: earlier stratum).
    """
    floors = [int(q) for q in quotas]
    remaining = total - sum(floors)
    order = sorted(
        range(len(quotas)), key=lambda i: (-(quotas[i] - floors[i]), i)
    )
    for i in order[:remaining]:
        floors[i] += 1
    return floors


def stratified_split(
    index: list[DatasetEntry],
    test_frac: float = 0.2,
    val_frac_of_train: float = 0.2,
    seed: int = 0,
) -> SplitResult:
    """Deterministic seeded split, stratified by filter type.

    Per-stratum counts follow largest-remainder apportionment of the global
    test target (round(test_frac * N)), then the val target is apportioned
    from the per-stratum remainders the same way. Strata with fewer than 3
    entries go wholly to train.
    """
    if not (0 < test_frac < 1 and 0 < val_frac_of_train < 1):
        raise InvalidConfig("split fractions must be in (0, 1)")

    strata: dict[FilterType, list[str]] = {}
    for e in index:
        strata.setdefault(e.filter_type, []).append(e.image_id)

    rng = SplitMix64(seed)
    train: list[str] = []
    eligible: list[list[str]] = []
    for ft, ids in strata.items():
        ids = list(ids)
        rng.shuffle(ids)
        if len(ids) < 3:
            log.warning("stratum %s has %d entries; assigning all to train", ft, len(ids))
            train.extend(ids)
        else:
            eligible.append(ids)

    n = sum(len(ids) for ids in eligible)
    test_total = _round_half_up(test_frac * n)
    test_counts = _largest_remainder([test_frac * len(ids) for ids in eligible], test_total)

    remainders = [len(ids) - t for ids, t in zip(eligible, test_counts)]
    val_total = _round_half_up(val_frac_of_train * sum(remainders))
    val_counts = _largest_remainder([val_frac_of_train * r for r in remainders], val_total)

    val: list[str] = []
    test: list[str] = []
    for ids, t, v in zip(eligible, test_counts, val_counts):
        test.extend(ids[:t])
        val.extend(ids[t : t + v])
        train.extend(ids[t + v :])
    return SplitResult(train=train, val=val, test=test)


INDEX_HEADER = ["image_id", "filter_type", "image_path", "label_path"]


def write_index(entries: list[DatasetEntry], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(INDEX_HEADER)
        for e in entries:
            writer.writerow([e.image_id, e.filter_type.value, e.image_path, e.label_path])


def read_index(path) -> list[DatasetEntry]:
    text = Path(path).read_text()
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or rows[0] != INDEX_HEADER:
        raise MalformedInput(f"{path}: expected header {','.join(INDEX_HEADER)}")
    entries = []
    for row in rows[1:]:
        if not row:
            continue
        if len(row) != 4:
            raise MalformedInput(f"{path}: bad index row {row!r}")
        image_id, ft, image_path, label_path = row
        try:
            filter_type = FilterType(ft)
        except ValueError as exc:
            raise MalformedInput(f"{path}: unknown filter type {ft!r}") from exc
        entries.append(DatasetEntry(image_id, filter_type, image_path, label_path))
    return entries
