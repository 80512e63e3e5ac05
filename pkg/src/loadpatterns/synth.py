"""Seeded synthetic smart-meter dataset with planted structure.

Substitutes for access-gated utility data: households get demographic
features drawn from seeded distributions, a ground-truth probability
distribution over seven archetypal daily shapes computed by a fixed
nonlinear function of those features (elderly residents tilt toward the
morning-peak shape, children toward the evening-peak shape, with
age-by-income interactions), and daily profiles sampled from that
distribution plus clipped Gaussian noise.

Income codes are 1..8 (ascending bracket midpoints roughly 15k..250k);
education codes are 1..5 (none/high school/some college/bachelor/
postgraduate). Both are this generator's own bracket definitions.
"""

from __future__ import annotations

import datetime as dt
import math
import os
from dataclasses import dataclass

import numpy as np

from .ingest import LoadProfile, write_profiles_csv
from .models import softmax
from .patterns import (
    DayType,
    HouseholdFeatures,
    PatternDistribution,
    write_distributions_csv,
    write_features_csv,
)


@dataclass(frozen=True)
class SynthConfig:
    n_households: int = 312
    start_date: dt.date = dt.date(2015, 1, 1)
    end_date: dt.date = dt.date(2017, 12, 31)
    n_archetypes: int = 7
    noise_std: float = 0.1
    mixing_sharpness: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.n_households < 2:
            raise ValueError("need at least 2 households")
        if not 2 <= self.n_archetypes <= len(DEFAULT_ARCHETYPES):
            raise ValueError(
                f"n_archetypes must lie in [2, {len(DEFAULT_ARCHETYPES)}]"
            )
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.mixing_sharpness <= 0:
            raise ValueError("mixing_sharpness must be positive")
        if self.end_date < self.start_date:
            raise ValueError("end_date precedes start_date")


@dataclass(frozen=True)
class Archetype:
    name: str
    shape: np.ndarray  # 24 non-negative hourly kWh values


def _hours(*segments) -> np.ndarray:
    """Build a 24-hour shape from (value, n_hours) runs."""
    out = []
    for value, n in segments:
        out.extend([value] * n)
    assert len(out) == 24
    return np.array(out)


DEFAULT_ARCHETYPES = (
    Archetype(
        "morning_peak",
        np.array([0.3, 0.3, 0.3, 0.3, 0.4, 1.0, 2.2, 2.5, 1.8, 1.0, 0.8, 0.7,
                  0.7, 0.6, 0.6, 0.6, 0.6, 0.7, 0.8, 0.8, 0.7, 0.5, 0.4, 0.3]),
    ),
    Archetype(
        "evening_peak",
        np.array([0.4, 0.3, 0.3, 0.3, 0.3, 0.3, 0.4, 0.5, 0.5, 0.5, 0.6, 0.6,
                  0.6, 0.6, 0.7, 0.8, 1.2, 1.8, 2.4, 2.6, 2.2, 1.5, 0.9, 0.5]),
    ),
    Archetype(
        "dual_peak",
        np.array([0.4, 0.3, 0.3, 0.3, 0.4, 0.8, 1.8, 2.2, 1.5, 0.8, 0.6, 0.6,
                  0.6, 0.6, 0.6, 0.7, 1.0, 1.6, 2.2, 2.3, 1.8, 1.2, 0.7, 0.5]),
    ),
    Archetype(
        "midday_peak",
        np.array([0.3, 0.3, 0.3, 0.3, 0.3, 0.4, 0.5, 0.7, 1.0, 1.5, 2.0, 2.4,
                  2.5, 2.3, 1.9, 1.4, 1.0, 0.8, 0.7, 0.6, 0.5, 0.4, 0.4, 0.3]),
    ),
    Archetype(
        "late_night_peak",
        np.array([2.0, 2.2, 1.8, 1.2, 0.8, 0.5, 0.4, 0.3, 0.3, 0.3, 0.3, 0.3,
                  0.3, 0.3, 0.3, 0.3, 0.3, 0.4, 0.5, 0.7, 1.0, 1.4, 1.8, 2.1]),
    ),
    Archetype("flat_low", np.linspace(0.25, 0.8, 24)),
    Archetype("flat_high", np.linspace(2.2, 1.35, 24)),
)


@dataclass(frozen=True)
class SynthDataset:
    config: SynthConfig
    features: list
    profiles: list
    ground_truth: list  # PatternDistribution per household per day type
    archetypes: tuple


def pattern_weights(f: HouseholdFeatures, n_archetypes: int = 7) -> np.ndarray:
    """Raw archetype affinities for a household (before sharpening).

    Deliberately nonlinear in the features: indicator products of age
    composition with income and floor space, so a purely linear map
    from features to pattern probabilities underfits.
    """
    kids, teens, students, young_adults, mid_a, mid_b, elderly = f.age_counts
    young = students + young_adults
    working = mid_a + mid_b
    has_elderly = elderly >= 1
    has_kids = kids >= 1
    has_teens = teens >= 1
    income = (f.income_code - 4.5) / 2.0  # roughly centered, |.| <= 1.75
    big_home = f.square_footage > 2100.0
    comfortable = (f.income_code >= 5) or big_home
    childfree_young = young >= 2 and kids + teens + elderly == 0

    w = np.zeros(len(DEFAULT_ARCHETYPES))
    # elderly wake early; those in modest homes stay with the morning
    # spike while comfortable retirees spread load through the day
    w[0] = has_elderly * (1.5 - 0.9 * comfortable) + 0.2 * min(elderly, 2)
    # children shift load to the evening, more strongly with income
    w[1] = (
        has_kids * (1.4 - 0.55 * (big_home and working >= 2))
        + 0.2 * min(kids, 2)
        + 0.45 * has_kids * income
        + 0.75 * has_teens
    )
    # working adults without children: morning+evening double spike
    w[2] = (working >= 2 and not (has_kids or has_teens)) * (
        1.4 + 0.3 * max(income, 0.0)
    ) + childfree_young * (0.6 + 0.5 * (f.income_code >= 5))
    # at home during the day: comfortable retirees
    w[3] = has_elderly * comfortable * (1.4 + 0.3 * max(income, 0.0))
    # student shared households skew nocturnal
    w[4] = (students >= 2) * (0.85 + 0.12 * young)
    # single young professionals: low, gently rising use
    w[5] = (young + working == 1 and kids + teens + elderly == 0) * (
        1.3 + 0.1 * (f.education_code >= 4)
    ) + childfree_young * (0.75 - 0.4 * (f.income_code >= 5))
    # big busy family homes: high baseline all day
    w[6] = (
        (working >= 2 and (has_kids or has_teens) and big_home) * 1.4
        + 0.45 * (f.square_footage > 2400.0)
        + 0.25 * max(income, 0.0) * (working >= 2)
    )
    return w[:n_archetypes]


_HOUSEHOLD_TYPES = (
    # name, probability, age bracket counts sampler inputs:
    # (kids, teens, 19_24, 25_34, 35_49, 50_64, 65p) ranges, income base, sqft median
    ("young_single", 0.10, ((0, 0), (0, 0), (0, 1), (1, 1), (0, 0), (0, 0), (0, 0)), 4, 950.0),
    ("young_couple", 0.11, ((0, 0), (0, 0), (0, 1), (2, 2), (0, 0), (0, 0), (0, 0)), 5, 1300.0),
    ("family_young", 0.19, ((1, 3), (0, 1), (0, 0), (0, 1), (2, 2), (0, 0), (0, 0)), 5, 2200.0),
    ("family_teen", 0.12, ((0, 1), (1, 2), (0, 0), (0, 0), (1, 2), (0, 1), (0, 0)), 6, 2500.0),
    ("midage_couple", 0.13, ((0, 0), (0, 0), (0, 0), (0, 0), (0, 1), (2, 2), (0, 0)), 6, 1900.0),
    ("retired_couple", 0.15, ((0, 0), (0, 0), (0, 0), (0, 0), (0, 0), (0, 1), (2, 2)), 4, 1900.0),
    ("retired_single", 0.11, ((0, 0), (0, 0), (0, 0), (0, 0), (0, 0), (0, 0), (1, 1)), 3, 1400.0),
    ("shared_house", 0.09, ((0, 0), (0, 0), (2, 4), (0, 1), (0, 0), (0, 0), (0, 0)), 3, 1600.0),
)


def _sample_features(household_id: str, rng) -> HouseholdFeatures:
    probs = np.array([t[1] for t in _HOUSEHOLD_TYPES])
    _, _, ranges, income_base, sqft_median = _HOUSEHOLD_TYPES[
        rng.choice(len(_HOUSEHOLD_TYPES), p=probs / probs.sum())
    ]
    counts = tuple(int(rng.integers(lo, hi + 1)) for lo, hi in ranges)
    if sum(counts) == 0:
        counts = (0, 0, 0, 1, 0, 0, 0)
    income = int(np.clip(income_base + rng.integers(-2, 3), 1, 8))
    education = int(np.clip(2 + (income >= 4) + rng.integers(-1, 3), 1, 5))
    sqft = float(np.round(sqft_median * rng.lognormal(0.0, 0.18), 1))
    return HouseholdFeatures(
        household_id=household_id,
        age_counts=counts,
        income_code=income,
        education_code=education,
        square_footage=sqft,
    )


def ground_truth_probs(
    f: HouseholdFeatures, cfg: SynthConfig, jitter: np.ndarray | None = None
) -> np.ndarray:
    """Sharpened, normalized archetype distribution for a household."""
    w = pattern_weights(f, cfg.n_archetypes)
    if jitter is not None:
        w = w + jitter
    return softmax(cfg.mixing_sharpness * w)


def generate(cfg: SynthConfig) -> SynthDataset:
    """Generate the full dataset in memory; deterministic per seed.

    Each household uses an RNG stream derived from (seed, household
    index), so generation could run per household in parallel without
    changing the output.
    """
    n_days = (cfg.end_date - cfg.start_date).days + 1
    dates = [cfg.start_date + dt.timedelta(days=i) for i in range(n_days)]
    shapes = np.stack([a.shape for a in DEFAULT_ARCHETYPES[: cfg.n_archetypes]])
    width = max(4, len(str(cfg.n_households)))

    features, profiles, ground_truth = [], [], []
    for idx in range(cfg.n_households):
        rng = np.random.default_rng([cfg.seed, idx])
        hid = f"h{idx:0{width}d}"
        f = _sample_features(hid, rng)
        features.append(f)
        # tiny jitter keeps archetype affinities tie-free so the
        # sharpness -> infinity limit is a single archetype
        jitter = rng.uniform(0.0, 1e-6, size=cfg.n_archetypes)
        probs = ground_truth_probs(f, cfg, jitter)
        for day_type in (DayType.WEEKDAY, DayType.WEEKEND):
            ground_truth.append(PatternDistribution(hid, day_type, probs))

        chosen = rng.choice(cfg.n_archetypes, size=n_days, p=probs)
        values = shapes[chosen]
        if cfg.noise_std > 0:
            values = values + rng.normal(0.0, cfg.noise_std, size=values.shape)
            values = np.maximum(values, 0.0)
        profiles.extend(
            LoadProfile(hid, date, values[i]) for i, date in enumerate(dates)
        )
    return SynthDataset(
        config=cfg,
        features=features,
        profiles=profiles,
        ground_truth=ground_truth,
        archetypes=tuple(DEFAULT_ARCHETYPES[: cfg.n_archetypes]),
    )


def write_dataset(dataset: SynthDataset, out_dir) -> dict:
    """Emit readings.csv, features.csv, and ground_truth.csv."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "readings": os.path.join(out_dir, "readings.csv"),
        "features": os.path.join(out_dir, "features.csv"),
        "ground_truth": os.path.join(out_dir, "ground_truth.csv"),
    }
    write_profiles_csv(dataset.profiles, paths["readings"])
    write_features_csv(dataset.features, paths["features"])
    write_distributions_csv(dataset.ground_truth, paths["ground_truth"])
    return paths
