"""Nearest-neighbor matching with Lowe's ratio test, plus deduplication.

Matching is exact 2-NN: a query descriptor is paired with its closest
database row when that distance beats the runner-up by the ratio threshold.
Distances come from the family metric: plain Euclidean for float
descriptors, Hamming on the base bits plus Euclidean on the region slots for
binary families. Because simulated views are pooled on both sides, one
physical correspondence can surface many times; dedupe collapses repeats on
a 2-pixel grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError, ParseError
from .imaging import round_half_up

__all__ = [
    "Match",
    "knn_match",
    "knn_match_hamming_mix",
    "dedupe",
    "write_matches",
    "read_matches",
]

DEFAULT_RATIO = 0.8

# Query rows per chunk are sized so a distance block stays ~64 MB.
_CHUNK_BUDGET = 2**23


@dataclass(frozen=True)
class Match:
    """One accepted correspondence, in original-image coordinates."""

    ax: float
    ay: float
    bx: float
    by: float
    distance: float
    view_a: int = 0
    view_b: int = 0


def _check_sides(n_query: int, n_db: int) -> None:
    if n_db < 2:
        raise InvalidParameterError(
            "ratio-test matching needs at least 2 database descriptors"
        )
    if n_query < 0:  # pragma: no cover - shape guard
        raise InvalidParameterError("negative query count")


def _sq_dists(q: np.ndarray, db: np.ndarray, db_sq: np.ndarray) -> np.ndarray:
    d = q @ db.T
    d *= -2.0
    d += (q * q).sum(axis=1, keepdims=True)
    d += db_sq[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _two_nearest(dist: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per row: index of the closest column plus the two smallest values."""
    part = np.argpartition(dist, 1, axis=1)[:, :2]
    vals = np.take_along_axis(dist, part, axis=1)
    swap = vals[:, 0] > vals[:, 1]
    best = np.where(swap, part[:, 1], part[:, 0])
    d1 = np.where(swap, vals[:, 1], vals[:, 0])
    d2 = np.where(swap, vals[:, 0], vals[:, 1])
    return best, d1, d2


def knn_match(
    desc_a: np.ndarray,
    desc_b: np.ndarray,
    ratio: float = DEFAULT_RATIO,
) -> list[tuple[int, int, float]]:
    """Euclidean 2-NN candidates (query index, database index, distance).

    A pair is kept when the best distance is strictly below ratio times the
    second best, so equidistant neighbors never survive. Raises
    InvalidParameterError when the database has fewer than two rows.
    """
    if not 0.0 < ratio <= 1.0:
        raise InvalidParameterError("ratio must lie in (0, 1]")
    _check_sides(len(desc_a), len(desc_b))
    if len(desc_a) == 0:
        return []
    # Float64 keeps the expansion's cancellation error far below any real
    # descriptor distance, so identical rows come out at ~0.
    a = np.ascontiguousarray(desc_a, dtype=np.float64)
    b = np.ascontiguousarray(desc_b, dtype=np.float64)
    b_sq = (b * b).sum(axis=1)
    out: list[tuple[int, int, float]] = []
    chunk = max(1, _CHUNK_BUDGET // max(len(b), 1))
    r2 = ratio * ratio
    for start in range(0, len(a), chunk):
        q = a[start : start + chunk]
        d2 = _sq_dists(q, b, b_sq)
        best, d1sq, d2sq = _two_nearest(d2)
        keep = d1sq < r2 * d2sq
        for i in np.flatnonzero(keep):
            out.append((start + int(i), int(best[i]), float(np.sqrt(d1sq[i]))))
    return out


def knn_match_hamming_mix(
    base_a: np.ndarray,
    extra_a: np.ndarray,
    base_b: np.ndarray,
    extra_b: np.ndarray,
    ratio: float = DEFAULT_RATIO,
) -> list[tuple[int, int, float]]:
    """2-NN for binary families: Hamming on bits + Euclidean on region slots.

    Base rows must be 0/1 valued; their squared Euclidean distance then
    equals the Hamming distance, which keeps the computation a matrix
    product.
    """
    if not 0.0 < ratio <= 1.0:
        raise InvalidParameterError("ratio must lie in (0, 1]")
    _check_sides(len(base_a), len(base_b))
    if len(base_a) == 0:
        return []
    ba = np.ascontiguousarray(base_a, dtype=np.float64)
    bb = np.ascontiguousarray(base_b, dtype=np.float64)
    ea = np.ascontiguousarray(extra_a, dtype=np.float64)
    eb = np.ascontiguousarray(extra_b, dtype=np.float64)
    bb_sq = (bb * bb).sum(axis=1)
    eb_sq = (eb * eb).sum(axis=1)
    out: list[tuple[int, int, float]] = []
    chunk = max(1, _CHUNK_BUDGET // (2 * max(len(bb), 1)))
    for start in range(0, len(ba), chunk):
        ham = _sq_dists(ba[start : start + chunk], bb, bb_sq)
        eur = np.sqrt(_sq_dists(ea[start : start + chunk], eb, eb_sq))
        total = ham + eur
        best, d1, d2 = _two_nearest(total)
        keep = d1 < ratio * d2
        for i in np.flatnonzero(keep):
            out.append((start + int(i), int(best[i]), float(d1[i])))
    return out


def _grid(v: float) -> int:
    return int(round_half_up(v / 2.0))


def dedupe(matches: list[Match]) -> list[Match]:
    """Collapse near-duplicate correspondences.

    First all matches whose endpoints round to the same 2-px grid cells on
    both sides collapse to the closest one; then each query-side grid cell
    keeps only its single best match, so one feature cannot claim several
    targets. Output is sorted by (distance, coordinates) for stable files.
    """
    by_pair: dict[tuple[int, int, int, int], Match] = {}
    for m in matches:
        key = (_grid(m.ax), _grid(m.ay), _grid(m.bx), _grid(m.by))
        cur = by_pair.get(key)
        if cur is None or m.distance < cur.distance:
            by_pair[key] = m
    by_query: dict[tuple[int, int], Match] = {}
    for key, m in by_pair.items():
        qkey = key[:2]
        cur = by_query.get(qkey)
        if cur is None or m.distance < cur.distance:
            by_query[qkey] = m
    return sorted(
        by_query.values(), key=lambda m: (m.distance, m.ax, m.ay, m.bx, m.by)
    )


def write_matches(path: str | Path, matches: list[Match]) -> None:
    """Write matches as ``ax ay bx by distance`` lines."""
    lines = [
        f"{m.ax:.6g} {m.ay:.6g} {m.bx:.6g} {m.by:.6g} {m.distance:.6g}"
        for m in matches
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_matches(path: str | Path) -> list[Match]:
    """Read a match file; raises ParseError with the offending line number."""
    path = Path(path)
    matches: list[Match] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 5:
            raise ParseError(
                f"expected 5 fields, got {len(parts)}", path=str(path), line=lineno
            )
        try:
            ax, ay, bx, by, dist = (float(p) for p in parts)
        except ValueError:
            raise ParseError("non-numeric field", path=str(path), line=lineno)
        matches.append(Match(ax=ax, ay=ay, bx=bx, by=by, distance=dist))
    return matches
