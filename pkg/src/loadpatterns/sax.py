"""Symbolic representation of daily load profiles.

A 24-hour profile is z-normalized, reduced to segment means (piecewise
aggregate approximation), and each segment mean is mapped to one of a
small number of symbols using breakpoints that cut the standard normal
into equiprobable cells. The per-cell conditional mean of N(0,1) serves
as a numeric embedding of each symbol, which is what clustering consumes.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

HOURS_PER_DAY = 24

_STD_NORMAL = NormalDist()


@dataclass(frozen=True)
class SaxConfig:
    """Segmentation and alphabet parameters.

    ``segment_hours * n_segments`` must equal ``hours``; profiles whose
    standard deviation falls below ``zero_variance_epsilon`` are treated
    as constant and normalize to all zeros.
    """

    hours: int = HOURS_PER_DAY
    segment_hours: int = 3
    n_segments: int = 8
    alphabet_size: int = 5
    zero_variance_epsilon: float = 1e-9

    def __post_init__(self):
        if self.segment_hours * self.n_segments != self.hours:
            raise ValueError(
                f"segment_hours*n_segments must equal hours: "
                f"{self.segment_hours}*{self.n_segments} != {self.hours}"
            )
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be at least 2")
        if self.zero_variance_epsilon <= 0:
            raise ValueError("zero_variance_epsilon must be positive")


@dataclass(frozen=True)
class BreakpointTable:
    """Equiprobable-cell breakpoints and per-cell symbol embeddings.

    ``breakpoints`` are the A-1 ascending quantile cuts of N(0,1);
    cell i is the half-open interval (breakpoints[i-1], breakpoints[i]]
    with the outer cells unbounded. ``symbol_embedding[i]`` is
    E[Z | Z in cell i] for Z ~ N(0,1).
    """

    breakpoints: np.ndarray
    symbol_embedding: np.ndarray

    @property
    def alphabet_size(self) -> int:
        return len(self.symbol_embedding)


@dataclass(frozen=True)
class SaxWord:
    """SAX representation of one household-day."""

    household_id: str
    date: dt.date
    paa: np.ndarray
    symbols: np.ndarray
    embedding: np.ndarray


def _standard_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def gaussian_breakpoints(alphabet_size: int) -> BreakpointTable:
    """Build the breakpoint table for an alphabet of the given size.

    Breakpoint i is the i/A quantile of N(0,1), so all A cells carry
    equal probability mass. The embedding of cell (a, b] is
    (pdf(a) - pdf(b)) * A, the conditional mean of N(0,1) on that cell.
    """
    if alphabet_size < 2:
        raise ValueError("alphabet_size must be at least 2")
    cuts = np.array(
        [_STD_NORMAL.inv_cdf(i / alphabet_size) for i in range(1, alphabet_size)]
    )
    # pdf at the cell edges; the unbounded outer edges contribute 0.
    edge_pdf = np.zeros(alphabet_size + 1)
    edge_pdf[1:-1] = [_standard_normal_pdf(b) for b in cuts]
    embedding = (edge_pdf[:-1] - edge_pdf[1:]) * alphabet_size
    return BreakpointTable(breakpoints=cuts, symbol_embedding=embedding)


def znormalize(values, epsilon: float = 1e-9) -> np.ndarray:
    """Standardize to mean 0 and population std 1.

    Inputs with population std below ``epsilon`` come back as all zeros
    (vacant-home days are real data, not an error).
    """
    x = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("profile values must be finite")
    std = float(x.std())
    if std < epsilon:
        return np.zeros_like(x)
    return (x - x.mean()) / std


def paa(normalized, cfg: SaxConfig) -> np.ndarray:
    """Segment means of a normalized profile (one value per segment)."""
    x = np.asarray(normalized, dtype=float)
    if x.shape != (cfg.hours,):
        raise ValueError(f"expected {cfg.hours} values, got shape {x.shape}")
    return x.reshape(cfg.n_segments, cfg.segment_hours).mean(axis=1)


def assign_symbols(paa_values, table: BreakpointTable) -> np.ndarray:
    """Map segment means to symbol indices.

    Cell convention is (a, b]: a value exactly on a breakpoint belongs
    to the lower cell.
    """
    v = np.asarray(paa_values, dtype=float)
    return np.searchsorted(table.breakpoints, v, side="left").astype(np.int64)


def symbolize(profile, cfg: SaxConfig, table: BreakpointTable) -> SaxWord:
    """Full pipeline for one profile: z-normalize, PAA, symbol lookup."""
    z = znormalize(profile.values, cfg.zero_variance_epsilon)
    segment_means = paa(z, cfg)
    symbols = assign_symbols(segment_means, table)
    return SaxWord(
        household_id=profile.household_id,
        date=profile.date,
        paa=segment_means,
        symbols=symbols,
        embedding=table.symbol_embedding[symbols],
    )


def symbolize_all(profiles, cfg: SaxConfig, table: BreakpointTable) -> list[SaxWord]:
    """Vectorized symbolization of many profiles at once."""
    if not profiles:
        return []
    x = np.stack([p.values for p in profiles]).astype(float)
    if not np.all(np.isfinite(x)):
        raise ValueError("profile values must be finite")
    std = x.std(axis=1, keepdims=True)
    safe = std >= cfg.zero_variance_epsilon
    z = np.where(safe, (x - x.mean(axis=1, keepdims=True)) / np.where(safe, std, 1.0), 0.0)
    means = z.reshape(len(profiles), cfg.n_segments, cfg.segment_hours).mean(axis=2)
    symbols = np.searchsorted(table.breakpoints, means, side="left").astype(np.int64)
    embeddings = table.symbol_embedding[symbols]
    return [
        SaxWord(
            household_id=p.household_id,
            date=p.date,
            paa=means[i],
            symbols=symbols[i],
            embedding=embeddings[i],
        )
        for i, p in enumerate(profiles)
    ]


def sax_distance(w1: SaxWord, w2: SaxWord, table: BreakpointTable) -> float:
    """Lower-bounding distance between two SAX words.

    Adjacent symbols contribute zero; otherwise a segment contributes
    the gap between the breakpoints enclosing the two cells. Scaled by
    sqrt(hours per segment) to stay a lower bound on the Euclidean
    distance between the original 24-hour profiles.
    """
    if len(w1.symbols) != len(w2.symbols):
        raise ValueError("words have different segment counts")
    a = len(table.symbol_embedding)
    if w1.symbols.max(initial=0) >= a or w2.symbols.max(initial=0) >= a:
        raise ValueError("symbols out of range for breakpoint table")
    hi = np.maximum(w1.symbols, w2.symbols)
    lo = np.minimum(w1.symbols, w2.symbols)
    gap = np.where(hi - lo <= 1, 0.0, table.breakpoints[hi - 1] - table.breakpoints[lo])
    segment_hours = HOURS_PER_DAY / len(w1.symbols)
    return math.sqrt(segment_hours) * math.sqrt(float(np.sum(gap * gap)))


def sax_csv_header(n_segments: int) -> list[str]:
    return (
        ["household_id", "date"]
        + [f"sym_{i}" for i in range(n_segments)]
        + [f"paa_{i}" for i in range(n_segments)]
    )


def words_to_csv_rows(words) -> list[list[str]]:
    """Rows for the SAX word CSV (symbols as ints, paa at 6 decimals)."""
    return [
        [w.household_id, w.date.isoformat()]
        + [str(int(s)) for s in w.symbols]
        + [f"{v:.6f}" for v in w.paa]
        for w in words
    ]


def words_from_csv_rows(header, rows, table: BreakpointTable) -> list[SaxWord]:
    """Rebuild SAX words from CSV rows; embeddings come from the table."""
    n_segments = sum(1 for name in header if name.startswith("sym_"))
    if n_segments == 0 or header[:2] != ["household_id", "date"]:
        raise ValueError("not a SAX word CSV: bad header")
    words = []
    for row in rows:
        symbols = np.array([int(s) for s in row[2 : 2 + n_segments]], dtype=np.int64)
        if symbols.min(initial=0) < 0 or symbols.max(initial=0) >= table.alphabet_size:
            raise ValueError(f"symbol out of range in row for {row[0]},{row[1]}")
        means = np.array([float(v) for v in row[2 + n_segments : 2 + 2 * n_segments]])
        words.append(
            SaxWord(
                household_id=row[0],
                date=dt.date.fromisoformat(row[1]),
                paa=means,
                symbols=symbols,
                embedding=table.symbol_embedding[symbols],
            )
        )
    return words
