"""Household pattern distributions and demographic feature encoding.

A household's behavior is summarized as a probability vector over the K
representative load patterns (the fraction of its days assigned to each
cluster). The demographic/socioeconomic record is encoded as a fixed
10-vector: seven age-bracket resident counts, ordinal income and
education codes, and square footage.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .ingest import DayType

AGE_BRACKETS = ("0_12", "13_18", "19_24", "25_34", "35_49", "50_64", "65p")

FEATURES_CSV_HEADER = (
    ["household_id"]
    + [f"age_{b}" for b in AGE_BRACKETS]
    + ["income_code", "education_code", "square_footage"]
)


@dataclass(frozen=True)
class HouseholdFeatures:
    """Demographic and socioeconomic record for one household.

    ``age_counts`` holds resident counts for the seven brackets in
    AGE_BRACKETS order; income and education are ascending ordinal codes.
    """

    household_id: str
    age_counts: tuple[int, ...]
    income_code: int
    education_code: int
    square_footage: float

    def __post_init__(self):
        if len(self.age_counts) != len(AGE_BRACKETS):
            raise ValueError(f"expected {len(AGE_BRACKETS)} age brackets")
        if any(c < 0 for c in self.age_counts):
            raise ValueError("age counts must be non-negative")
        if sum(self.age_counts) < 1:
            raise ValueError("household must have at least one resident")
        if self.square_footage <= 0:
            raise ValueError("square footage must be positive")


@dataclass(frozen=True)
class PatternDistribution:
    """A point on the K-simplex: probability over the K load patterns."""

    household_id: str
    day_type: DayType
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if np.any(p < 0) or np.any(p > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        object.__setattr__(self, "probs", p)


def empirical_distribution(
    household_id: str, assignments, n_patterns: int, day_type: DayType
) -> PatternDistribution:
    """Fraction of the household's profiles assigned to each pattern."""
    a = np.asarray(assignments, dtype=np.int64)
    if len(a) == 0:
        raise ValueError(f"household {household_id} has no assigned profiles")
    if a.min() < 0 or a.max() >= n_patterns:
        raise ValueError("assignment index out of range")
    counts = np.bincount(a, minlength=n_patterns)
    return PatternDistribution(household_id, day_type, counts / len(a))


def encode_features(f: HouseholdFeatures) -> np.ndarray:
    """Fixed-order numeric vector: age counts, income, education, sqft."""
    return np.array(
        [*f.age_counts, f.income_code, f.education_code, f.square_footage],
        dtype=float,
    )


def distributions_csv_header(n_patterns: int) -> list[str]:
    return ["household_id", "day_type"] + [f"p_{j}" for j in range(n_patterns)]


def write_features_csv(features, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FEATURES_CSV_HEADER)
        for f in features:
            w.writerow(
                [f.household_id]
                + [str(c) for c in f.age_counts]
                + [str(f.income_code), str(f.education_code), repr(float(f.square_footage))]
            )


def read_features_csv(path) -> list[HouseholdFeatures]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != FEATURES_CSV_HEADER:
            raise ValueError(f"bad features CSV header in {path}")
        out = []
        for row in r:
            if not row:
                continue
            out.append(
                HouseholdFeatures(
                    household_id=row[0],
                    age_counts=tuple(int(c) for c in row[1:8]),
                    income_code=int(row[8]),
                    education_code=int(row[9]),
                    square_footage=float(row[10]),
                )
            )
    return out


def write_distributions_csv(distributions, path) -> None:
    dists = list(distributions)
    if not dists:
        raise ValueError("no distributions to write")
    n = len(dists[0].probs)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(distributions_csv_header(n))
        for d in dists:
            w.writerow(
                [d.household_id, d.day_type.value] + [repr(float(p)) for p in d.probs]
            )


def read_distributions_csv(path) -> list[PatternDistribution]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header is None or header[:2] != ["household_id", "day_type"]:
            raise ValueError(f"bad distributions CSV header in {path}")
        out = []
        for row in r:
            if not row:
                continue
            out.append(
                PatternDistribution(
                    household_id=row[0],
                    day_type=DayType(row[1]),
                    probs=np.array([float(p) for p in row[2:]]),
                )
            )
    return out
