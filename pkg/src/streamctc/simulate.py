"""Synthetic peaky emission matrices and the bit-exact emission file format.

The simulator produces the characteristic shape of CTC posteriors: each
ground-truth character gets a short run of frames with most of the mass on
that character, separated by blank-dominated frames, with a blank separator
always present between repeated characters (otherwise the repeat would
collapse).  Remaining mass is spread uniformly over the other entries.

Randomness comes from the stdlib Mersenne Twister (``random.Random``) using
only ``random()`` draws, which CPython keeps stable across versions and
platforms, so seeded outputs and golden files are reproducible everywhere.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import IO

import numpy as np

from .ctc import ROW_SUM_TOL, Alphabet, EmissionMatrix
from .errors import ParseError, ValidationError

CTCEM_MAGIC = "CTCEM v1"

#: Written after the visible characters in the file header to stand for the
#: blank column; purely presentational (the parser only strips it).
BLANK_MARKER = "-"


@dataclass(frozen=True)
class SimConfig:
    peak_prob: float = 0.9
    frames_per_char: float = 3.0
    noise_seed: int = 0
    blank_fill: bool = True

    def __post_init__(self):
        if not 0.0 < self.peak_prob <= 1.0:
            raise ValidationError("peak_prob must be in (0, 1]")
        if self.frames_per_char < 1:
            raise ValidationError("frames_per_char must be >= 1")


def _draw_run_length(rng: random.Random, mean: float) -> int:
    """Geometric on {1, 2, ...} with the given mean, from a single uniform draw."""
    if mean <= 1.0:
        return 1
    p = 1.0 / mean
    u = rng.random()
    return max(1, math.ceil(math.log1p(-u) / math.log1p(-p)))


def simulate(gt: str, alphabet: Alphabet, config: SimConfig | None = None) -> EmissionMatrix:
    """Emission matrix whose beam/greedy decode recovers ``gt`` when peaked
    strongly enough.  Deterministic given the seed."""
    config = config if config is not None else SimConfig()
    alphabet.validate_text(gt)
    size = alphabet.size
    if config.peak_prob <= 1.0 / size:
        raise ValidationError(
            f"peak_prob {config.peak_prob} does not dominate a uniform row over {size} entries"
        )
    rng = random.Random(config.noise_seed)
    rest = (1.0 - config.peak_prob) / (size - 1)

    def peaked(idx: int) -> np.ndarray:
        row = np.full(size, rest)
        row[idx] = config.peak_prob
        return row

    blank_row = peaked(alphabet.blank_index)
    rows: list[np.ndarray] = []
    if config.blank_fill:
        rows += [blank_row] * _draw_run_length(rng, config.frames_per_char)
    for i, ch in enumerate(gt):
        if i > 0:
            if config.blank_fill:
                gap = _draw_run_length(rng, config.frames_per_char)
            elif gt[i - 1] == ch:
                gap = 1  # forced separator: repeats need a blank in between
            else:
                gap = 0
            rows += [blank_row] * gap
        rows += [peaked(alphabet.index_of(ch))] * _draw_run_length(rng, config.frames_per_char)
    if config.blank_fill and gt:
        rows += [blank_row] * _draw_run_length(rng, config.frames_per_char)
    data = np.array(rows) if rows else np.zeros((0, size))
    return EmissionMatrix(alphabet, data)


def save_emissions(em: EmissionMatrix, sink) -> None:
    """Write the versioned text format; floats use shortest round-trip repr."""
    own = not hasattr(sink, "write")
    fh: IO[str] = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        fh.write(
            f"{CTCEM_MAGIC} {em.num_frames} {em.alphabet.size} "
            f"{em.alphabet.symbols}{BLANK_MARKER}\n"
        )
        for row in em.probs:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
    finally:
        if own:
            fh.close()


def parse_emissions_header(line: str) -> tuple[Alphabet, int]:
    """Parse a header line into (alphabet, declared frame count)."""
    line = line.rstrip("\n")
    parts = line.split(" ", 4)
    if len(parts) != 5 or parts[0] != "CTCEM" or parts[1] != "v1":
        raise ParseError(f"bad header {line!r}, expected '{CTCEM_MAGIC} ...'", line=1)
    try:
        frames = int(parts[2])
        width = int(parts[3])
    except ValueError as exc:
        raise ParseError(f"bad frame/width counts in header: {exc}", line=1) from exc
    if frames < 0:
        raise ParseError(f"negative frame count {frames}", line=1)
    field = parts[4]
    if len(field) < 2:
        raise ParseError("header alphabet field needs at least one visible "
                         "character and the blank marker", line=1)
    alphabet = Alphabet(field[:-1])
    if alphabet.size != width:
        raise ParseError(
            f"header declares width {width} but the alphabet implies {alphabet.size}",
            line=1,
        )
    return alphabet, frames


def parse_emission_row(line: str, size: int, lineno: int | None = None) -> np.ndarray:
    fields = line.split(" ")
    if len(fields) != size:
        raise ParseError(f"expected {size} values, got {len(fields)}", line=lineno)
    try:
        row = np.array([float(f) for f in fields])
    except ValueError as exc:
        raise ParseError(f"bad float: {exc}", line=lineno) from exc
    if row.min() < 0.0 or row.max() > 1.0:
        raise ValidationError(f"line {lineno}: row entries must lie in [0, 1]")
    total = row.sum()
    if abs(total - 1.0) > ROW_SUM_TOL:
        raise ValidationError(f"line {lineno}: row sums to {total!r}, expected 1")
    return row


def load_emissions(source) -> EmissionMatrix:
    own = not hasattr(source, "read")
    fh: IO[str] = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        header = fh.readline()
        if not header:
            raise ParseError("empty emission file", line=1)
        alphabet, frames = parse_emissions_header(header)
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            rows.append(parse_emission_row(raw, alphabet.size, lineno))
        if len(rows) != frames:
            raise ParseError(
                f"header declares {frames} frames but the file holds {len(rows)} rows"
            )
        data = np.array(rows) if rows else np.zeros((0, alphabet.size))
        return EmissionMatrix(alphabet, data)
    finally:
        if own:
            fh.close()
