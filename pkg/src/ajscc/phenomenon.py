"""Block-correlated ground-truth fields for the sensed voltages.

A field is an nx x ny grid of sensors observed at nt time instants.  The
phenomenon is correlated over s_p x s_p spatial blocks and t_p-instant time
windows; inside each (space block x time block) the value is constant,
drawn i.i.d. uniform on [lo, hi].  Block boundaries align with the grid
origin.  An optional jitter knob perturbs samples inside blocks for
sensitivity studies (default off, keeping the block-averaging contract
exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Field", "generate_field", "block_means", "field_to_csv", "field_from_csv"]


@dataclass(frozen=True)
class Field:
    nx: int
    ny: int
    nt: int
    s_p: int  # spatial correlation block side [cells]
    t_p: int  # temporal correlation window [instants]
    lo: float
    hi: float
    seed: int
    values: np.ndarray  # (nx, ny, nt) voltages, all within [lo, hi]

    def __post_init__(self) -> None:
        if self.values.shape != (self.nx, self.ny, self.nt):
            raise ValueError(
                f"values shape {self.values.shape} != {(self.nx, self.ny, self.nt)}"
            )

    @property
    def n_blocks(self) -> int:
        return (
            -(-self.nx // self.s_p) * (-(-self.ny // self.s_p)) * (-(-self.nt // self.t_p))
        )


def generate_field(nx: int, ny: int, nt: int, s_p: int, t_p: int,
                   lo: float, hi: float, seed: int, jitter: float = 0.0) -> Field:
    """Draw a block-constant random field; deterministic per seed."""
    for name, dim in (("nx", nx), ("ny", ny), ("nt", nt), ("s_p", s_p), ("t_p", t_p)):
        if dim < 1:
            raise ValueError(f"{name} must be >= 1, got {dim}")
    if s_p > nx or s_p > ny:
        raise ValueError(f"s_p={s_p} exceeds grid {nx}x{ny}")
    if t_p > nt:
        raise ValueError(f"t_p={t_p} exceeds nt={nt}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got ({lo}, {hi})")
    if jitter < 0:
        raise ValueError("jitter must be non-negative")

    bx, by, bt = -(-nx // s_p), -(-ny // s_p), -(-nt // t_p)
    rng = np.random.default_rng(seed)
    blocks = lo + (hi - lo) * rng.random((bx, by, bt))
    values = blocks.repeat(s_p, axis=0).repeat(s_p, axis=1).repeat(t_p, axis=2)
    values = values[:nx, :ny, :nt]
    if jitter > 0:
        values = np.clip(values + rng.uniform(-jitter, jitter, values.shape), lo, hi)
    return Field(nx, ny, nt, s_p, t_p, float(lo), float(hi), int(seed), values)


def block_means(values: np.ndarray, s_p: int, t_p: int) -> np.ndarray:
    """Mean over each (s_p x s_p x t_p) block; edge blocks may be partial."""
    nx, ny, nt = values.shape
    bx, by, bt = -(-nx // s_p), -(-ny // s_p), -(-nt // t_p)
    out = np.empty((bx, by, bt))
    for i in range(bx):
        for j in range(by):
            for k in range(bt):
                out[i, j, k] = values[
                    i * s_p:(i + 1) * s_p, j * s_p:(j + 1) * s_p, k * t_p:(k + 1) * t_p
                ].mean()
    return out


def field_to_csv(field: Field, path) -> None:
    """Write the field as rows (x, y, t, value) with a metadata comment line."""
    with open(path, "w") as fh:
        fh.write(
            f"# nx={field.nx} ny={field.ny} nt={field.nt} s_p={field.s_p} "
            f"t_p={field.t_p} lo={float(field.lo)!r} hi={float(field.hi)!r} "
            f"seed={field.seed}\n"
        )
        fh.write("x,y,t,value\n")
        for x in range(field.nx):
            for y in range(field.ny):
                for t in range(field.nt):
                    fh.write(f"{x},{y},{t},{float(field.values[x, y, t])!r}\n")


def field_from_csv(path) -> Field:
    """Read a field written by :func:`field_to_csv`."""
    with open(path) as fh:
        meta_line = fh.readline()
        if not meta_line.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        meta = dict(kv.split("=", 1) for kv in meta_line[1:].split())
        header = fh.readline().strip()
        if header != "x,y,t,value":
            raise ValueError(f"{path}: unexpected header {header!r}")
        nx, ny, nt = int(meta["nx"]), int(meta["ny"]), int(meta["nt"])
        values = np.empty((nx, ny, nt))
        seen = 0
        for line in fh:
            xs, ys, ts, vs = line.strip().split(",")
            values[int(xs), int(ys), int(ts)] = float(vs)
            seen += 1
        if seen != nx * ny * nt:
            raise ValueError(f"{path}: expected {nx * ny * nt} rows, got {seen}")
    return Field(nx, ny, nt, int(meta["s_p"]), int(meta["t_p"]),
                 float(meta["lo"]), float(meta["hi"]), int(meta["seed"]), values)
