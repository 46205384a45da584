"""Chronological train/validation/test partitioning.

Default boundaries follow the half-open UTC date scheme: training covers
[2015-05-01, 2016-03-01), validation [2016-03-01, 2016-05-01), test
[2016-05-01, 2016-07-01); anything before the training start is excluded
entirely.
"""

import logging
from dataclasses import dataclass
from datetime import datetime, timezone

log = logging.getLogger(__name__)


def _utc(year, month, day):
    return datetime(year, month, day, tzinfo=timezone.utc)


@dataclass(frozen=True)
class TimeSplit:
    train_start: datetime = _utc(2015, 5, 1)
    valid_start: datetime = _utc(2016, 3, 1)
    test_start: datetime = _utc(2016, 5, 1)
    test_end: datetime = _utc(2016, 7, 1)

    PARTITIONS = ("train", "valid", "test")

    def __post_init__(self):
        if not (self.train_start < self.valid_start < self.test_start < self.test_end):
            raise ValueError("split boundaries must be strictly increasing")

    def assign(self, timestamp) -> str | None:
        """Partition name for a timestamp, or None when excluded."""
        if timestamp < self.train_start or timestamp >= self.test_end:
            return None
        if timestamp < self.valid_start:
            return "train"
        if timestamp < self.test_start:
            return "valid"
        return "test"

    def range_of(self, name):
        starts = {
            "train": (self.train_start, self.valid_start),
            "valid": (self.valid_start, self.test_start),
            "test": (self.test_start, self.test_end),
        }
        return starts[name]


def split_corpus(pairs, split: TimeSplit = None):
    """Partition (RawRevision, RevisionMetadata) pairs; returns a dict with
    'train'/'valid'/'test'/'excluded' lists. Empty partitions warn only."""
    split = split or TimeSplit()
    out = {"train": [], "valid": [], "test": [], "excluded": []}
    for pair in pairs:
        name = split.assign(pair[0].timestamp)
        out[name if name else "excluded"].append(pair)
    for name in TimeSplit.PARTITIONS:
        if not out[name]:
            log.warning("time split partition %r is empty", name)
    return out
