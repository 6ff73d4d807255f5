"""Duration distributions reported by the elapsed-time metrics.

Percentiles use the nearest-rank method: deterministic, and trivially
reproducible by brute-force oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence


def nearest_rank(sorted_samples: Sequence[float], percentile: int) -> float:
    """Nearest-rank percentile over pre-sorted samples (whole percentile in (0, 100])."""
    if not sorted_samples:
        raise ValueError("percentile of empty sample set")
    if not 0 < percentile <= 100:
        raise ValueError(f"percentile must be in (0, 100], got {percentile}")
    n = len(sorted_samples)
    rank = (percentile * n + 99) // 100  # ceil(percentile * n / 100), exact
    return sorted_samples[rank - 1]


@dataclass(frozen=True, slots=True)
class DurationDistribution:
    """Median/p75/p90 summary of elapsed-time samples plus in-flight count."""

    samples_n: int
    median: float | None
    p75: float | None
    p90: float | None
    in_flight_n: int = 0

    def __post_init__(self) -> None:
        if self.samples_n < 0 or self.in_flight_n < 0:
            raise ValueError("counts must be >= 0")
        if self.samples_n == 0:
            if any(v is not None for v in (self.median, self.p75, self.p90)):
                raise ValueError("percentiles must be absent when samples_n = 0")
        else:
            assert self.median is not None and self.p75 is not None and self.p90 is not None
            if not self.median <= self.p75 <= self.p90:
                raise ValueError("percentiles must be ordered: median <= p75 <= p90")

    @classmethod
    def from_samples(cls, samples: Sequence[float], in_flight_n: int = 0) -> DurationDistribution:
        if not samples:
            return cls(samples_n=0, median=None, p75=None, p90=None, in_flight_n=in_flight_n)
        ordered = sorted(samples)
        return cls(
            samples_n=len(ordered),
            median=nearest_rank(ordered, 50),
            p75=nearest_rank(ordered, 75),
            p90=nearest_rank(ordered, 90),
            in_flight_n=in_flight_n,
        )

    def to_record(self) -> dict[str, Any]:
        return {
            "samples_n": self.samples_n,
            "median": self.median,
            "p75": self.p75,
            "p90": self.p90,
            "in_flight_n": self.in_flight_n,
        }
