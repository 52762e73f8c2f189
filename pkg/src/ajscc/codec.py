"""2:1 compression of two voltages into one drain current, and back.

Encoding quantizes the first reading to a discrete set of gate levels and
drives the transistor with (level, second reading), transmitting only the
resulting current.  Decoding takes two consecutive received currents that
are assumed to lie on one output curve and recovers the level by slope
matching: the slope implied by the currents themselves, lam * (i1 + i2) / 2,
is compared with the two-point slope each candidate level would produce.
Candidates are tried in ascending score order and the first whose implied
drain voltages both fall inside the transmitter's known vds interval wins;
picking anything but the score-minimal candidate is flagged as a
correction.

Caveat on fine level spacing: two consecutive currents constrain the curve
only up to the family of levels whose implied vds stays in range.  If
adjacent levels are spaced closer than that ambiguity window, i.e.

    (1 + delta / (level - v_th))**2  <=  (1 + lam * vds_hi) / (1 + lam * vds_lo)

for some level, a noiseless pair can decode to a neighbouring level.  The
exact-recovery guarantees therefore hold only for configurations whose
spacing exceeds this window (all coarse-level setups here do).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .mosfet import MosfetParams, drain_current

__all__ = [
    "RANGE_TOL",
    "CodecConfig",
    "DecodedPair",
    "build_levels",
    "quantize",
    "encode",
    "decode_pair",
    "decode_pairs",
    "decode_stream",
    "stream_estimates",
]

# Tolerance on the vds_range boundaries so exact-endpoint decodes stay
# in range under floating-point round-off.
RANGE_TOL = 1e-6


def build_levels(vgs_range: tuple[float, float], delta: float, min_levels: int = 1) -> np.ndarray:
    """Uniform level set {lo, lo+delta, ...} up to the largest value <= hi.

    Warns (and with min_levels >= 2, raises) when the spacing admits only a
    single level, since the decoder then has nothing to discriminate.
    """
    lo, hi = float(vgs_range[0]), float(vgs_range[1])
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta}")
    if hi < lo:
        raise ValueError(f"empty vgs_range {vgs_range}")
    n = int(np.floor((hi - lo) / delta * (1.0 + 1e-12) + 1e-12)) + 1
    levels = lo + delta * np.arange(n)
    levels[-1] = min(levels[-1], hi)
    if n < min_levels:
        raise ValueError(f"spacing {delta} yields {n} level(s), caller requires {min_levels}")
    if n == 1:
        warnings.warn(f"spacing {delta} over {vgs_range} yields a single level", stacklevel=2)
    return levels


@dataclass(frozen=True)
class CodecConfig:
    """Level set and valid ranges shared by transmitter and receiver.

    levels must be strictly ascending; when ``delta`` is given the set must
    be uniform with that spacing and start at the low end of vgs_range.
    vds_range is the drain-voltage interval the transmitter guarantees,
    which the decoder uses for range checking.
    """

    levels: np.ndarray
    vgs_range: tuple[float, float]
    vds_range: tuple[float, float]
    delta: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "levels", np.asarray(self.levels, dtype=float))
        if self.levels.ndim != 1 or self.levels.size == 0:
            raise ValueError("levels must be a non-empty 1-d sequence")
        if self.levels.size > 1 and not np.all(np.diff(self.levels) > 0):
            raise ValueError("levels must be strictly ascending")
        if not self.vds_range[0] < self.vds_range[1]:
            raise ValueError(f"invalid vds_range {self.vds_range}")
        if self.delta is not None:
            gaps = np.diff(self.levels)
            if gaps.size and np.max(np.abs(gaps - self.delta)) > 1e-12:
                raise ValueError("levels are not uniform with the declared delta")
            if abs(self.levels[0] - self.vgs_range[0]) > 1e-12:
                raise ValueError("uniform levels must start at vgs_range[0]")
            if self.levels[-1] > self.vgs_range[1] + 1e-12:
                raise ValueError("levels exceed vgs_range[1]")

    @classmethod
    def uniform(cls, vgs_range, delta, vds_range, min_levels: int = 2) -> "CodecConfig":
        return cls(
            levels=build_levels(vgs_range, delta, min_levels=min_levels),
            vgs_range=(float(vgs_range[0]), float(vgs_range[1])),
            vds_range=(float(vds_range[0]), float(vds_range[1])),
            delta=float(delta),
        )


@dataclass(frozen=True)
class DecodedPair:
    """Decoder output for one pair of consecutive currents."""

    vgs_hat: float
    vds_hat_1: float
    vds_hat_2: float
    corrected: bool  # a better-scoring candidate was rejected by range check
    in_range: bool   # final vds estimates lie inside vds_range


def quantize(value, levels):
    """Nearest level to ``value``; exact ties break toward the lower level."""
    levels = np.asarray(levels, dtype=float)
    if levels.size == 0:
        raise ValueError("levels must be non-empty")
    value = np.asarray(value, dtype=float)
    idx = np.searchsorted(levels, value)
    lo = np.clip(idx - 1, 0, levels.size - 1)
    hi = np.clip(idx, 0, levels.size - 1)
    take_lo = np.abs(value - levels[lo]) <= np.abs(levels[hi] - value)
    out = np.where(take_lo, levels[lo], levels[hi])
    return float(out) if np.ndim(out) == 0 else out


def _check_levels_on(p: MosfetParams, cfg: CodecConfig) -> None:
    if cfg.levels[0] <= p.v_th:
        raise ValueError(f"levels must all exceed v_th={p.v_th} V")


def encode(p: MosfetParams, cfg: CodecConfig, vgs_raw, vds):
    """Encoded drain current for raw inputs (vgs_raw, vds).

    vds must lie inside cfg.vds_range; vgs_raw is snapped to the level set.
    """
    _check_levels_on(p, cfg)
    vds = np.asarray(vds, dtype=float)
    lo, hi = cfg.vds_range
    if np.any(vds < lo - RANGE_TOL) or np.any(vds > hi + RANGE_TOL):
        raise ValueError(f"vds outside configured range {cfg.vds_range}")
    return drain_current(p, quantize(vgs_raw, cfg.levels), vds)


def decode_pairs(p: MosfetParams, cfg: CodecConfig, ids1, ids2, range_check: bool = True):
    """Vectorized slope-matching decode of current pairs.

    Returns (vgs_hat, vds_hat_1, vds_hat_2, corrected, in_range) arrays of
    the common broadcast shape.  Degenerate pairs (ids1 == ids2) leave the
    two-point slope undefined; their candidate order falls back to
    ascending levels so the range check alone selects the lowest level in
    range.  Non-positive currents are tolerated: their implied vds is far
    out of range and the pair resolves through the fallback path.
    """
    _check_levels_on(p, cfg)
    ids1 = np.atleast_1d(np.asarray(ids1, dtype=float))
    ids2 = np.atleast_1d(np.asarray(ids2, dtype=float))
    if ids1.shape != ids2.shape:
        raise ValueError("ids1 and ids2 must have the same shape")

    levels = cfg.levels
    base = 0.5 * p.k_gain * (levels - p.v_th) ** 2  # current at vds = 0, per level
    with np.errstate(divide="ignore", invalid="ignore"):
        v1 = (ids1[:, None] / base - 1.0) / p.lam
        v2 = (ids2[:, None] / base - 1.0) / p.lam
        slope1 = p.lam * (ids1 + ids2) / 2.0
        slope2 = (ids2 - ids1)[:, None] / (v2 - v1)
        score = np.abs(slope2 - slope1[:, None])
    degenerate = (ids2 == ids1)[:, None] | ~np.isfinite(score)
    score = np.where(degenerate, np.inf, score)

    # Stable sort: equal scores (and the all-inf degenerate case) keep
    # ascending level order, so ties break toward the lower level.
    order = np.argsort(score, axis=1, kind="stable")

    rlo, rhi = cfg.vds_range
    ok = (v1 >= rlo - RANGE_TOL) & (v1 <= rhi + RANGE_TOL) \
        & (v2 >= rlo - RANGE_TOL) & (v2 <= rhi + RANGE_TOL)

    rows = np.arange(ids1.shape[0])
    if range_check:
        ok_sorted = np.take_along_axis(ok, order, axis=1)
        any_ok = ok_sorted.any(axis=1)
        pos = np.where(any_ok, np.argmax(ok_sorted, axis=1), 0)
        sel = np.take_along_axis(order, pos[:, None], axis=1)[:, 0]
        corrected = any_ok & (pos > 0)
        in_range = any_ok
    else:
        sel = order[:, 0]
        corrected = np.zeros(ids1.shape[0], dtype=bool)
        in_range = ok[rows, sel]

    return levels[sel], v1[rows, sel], v2[rows, sel], corrected, in_range


def decode_pair(p: MosfetParams, cfg: CodecConfig, ids1: float, ids2: float,
                range_check: bool = True) -> DecodedPair:
    """Decode one pair of consecutive currents to (vgs_hat, vds_hat_1, vds_hat_2)."""
    g, v1, v2, corr, ok = decode_pairs(p, cfg, [ids1], [ids2], range_check=range_check)
    return DecodedPair(float(g[0]), float(v1[0]), float(v2[0]), bool(corr[0]), bool(ok[0]))


def decode_stream(p: MosfetParams, cfg: CodecConfig, ids,
                  range_check: bool = True) -> list[DecodedPair]:
    """Decode a current sequence as non-overlapping consecutive pairs.

    Pairs are (0,1), (2,3), ...; an odd trailing sample is decoded through
    the extra pair (n-2, n-1), appended last (its result applies to the
    trailing sample only, see :func:`stream_estimates`).
    """
    ids = np.asarray(ids, dtype=float)
    n = ids.size
    if n < 2:
        raise ValueError(f"need at least 2 samples to decode, got {n}")
    m = (n // 2) * 2
    g, v1, v2, corr, ok = decode_pairs(p, cfg, ids[0:m:2], ids[1:m:2], range_check=range_check)
    pairs = [DecodedPair(float(g[i]), float(v1[i]), float(v2[i]), bool(corr[i]), bool(ok[i]))
             for i in range(g.size)]
    if n % 2:
        pairs.append(decode_pair(p, cfg, float(ids[-2]), float(ids[-1]), range_check=range_check))
    return pairs


def stream_estimates(pairs: list[DecodedPair], n: int):
    """Per-sample (vgs_hat, vds_hat) arrays for a stream of length n.

    Both samples of a pair receive the pair's vgs_hat and their own vds
    estimate; for odd n the final pair contributes only the trailing
    sample's values.
    """
    expected = n // 2 + (n % 2)
    if len(pairs) != expected:
        raise ValueError(f"{len(pairs)} pairs inconsistent with stream length {n}")
    vgs = np.empty(n)
    vds = np.empty(n)
    for j in range(n // 2):
        pr = pairs[j]
        vgs[2 * j] = vgs[2 * j + 1] = pr.vgs_hat
        vds[2 * j] = pr.vds_hat_1
        vds[2 * j + 1] = pr.vds_hat_2
    if n % 2:
        pr = pairs[-1]
        vgs[n - 1] = pr.vgs_hat
        vds[n - 1] = pr.vds_hat_2
    return vgs, vds
