"""Lag-buffered streaming decoding with lookahead hypotheses, word
completions, and receptive-field arithmetic.

The decoder receives one emission row per input frame.  Rows sit in a lag
buffer of up to ``lag`` frames; once the buffer overflows, each push commits
the oldest row into the committed beam (which from then on never changes for
that frame) and then replays the buffered rows on a copy of the committed
beam to produce a lookahead hypothesis, as if the utterance ended now.
Flushing commits the remaining buffer, so the final transcript is exactly
the offline beam-search result.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .beam import Beam, BeamConfig, beam_init, beam_step, normalized_score
from .ctc import Alphabet
from .errors import ValidationError
from .lm import CharLm, UniformLm
from .metrics import edit_distance


@dataclass(frozen=True)
class ReceptiveFieldSpec:
    """Temporal filter widths of a convolution stack, one per layer."""

    layer_filter_widths: tuple[int, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_filter_widths)
        object.__setattr__(self, "layer_filter_widths", widths)
        for w in widths:
            if w < 1 or w % 2 == 0:
                raise ValidationError(f"filter widths must be odd and >= 1, got {w}")


def receptive_field(spec: ReceptiveFieldSpec | Iterable[int]) -> tuple[int, int]:
    """Total receptive field R and future half-span r of a temporal stack.

    Each layer of width K sees (K-1)/2 frames into the future, so
    r = sum((K_i - 1) / 2) and R = 2r + 1.
    """
    if not isinstance(spec, ReceptiveFieldSpec):
        spec = ReceptiveFieldSpec(tuple(spec))
    r = sum((w - 1) // 2 for w in spec.layer_filter_widths)
    return 2 * r + 1, r


@dataclass(frozen=True)
class IncrementalOutput:
    """Per-frame display: committed prefix, lookahead hypothesis, completion."""

    frame_index: int
    committed: str
    hypothesis: str
    completion: str
    score: float


def lm_complete_word(prefix: str, lm: CharLm, max_chars: int = 16) -> str:
    """Greedy LM rollout finishing the current word of ``prefix``.

    Stops at a space (kept, terminal), end-of-sentence, or after
    ``max_chars`` characters; returns only the appended characters.  A prefix
    that is empty or already ends in a space has no word to complete.
    """
    if max_chars <= 0 or not prefix or prefix.endswith(" "):
        return ""
    state = lm.initial_state()
    for ch in prefix:
        state = lm.advance(state, ch)
    eos_index = len(lm.symbols)
    out: list[str] = []
    while len(out) < max_chars:
        best = int(np.argmax(lm.next_log_probs(state)))
        if best == eos_index:
            break
        ch = lm.symbols[best]
        out.append(ch)
        if ch == " ":
            break
        state = lm.advance(state, ch)
    return "".join(out)


class StreamingDecoder:
    """One decoding stream; feed rows with :meth:`push`, end with :meth:`flush`.

    A single immutable LM may be shared by many concurrent streams, but each
    stream is single-threaded.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        config: BeamConfig | None = None,
        lag: int = 22,
        lm: CharLm | None = None,
        completion_chars: int = 16,
    ):
        if lag < 0:
            raise ValidationError("lag must be >= 0")
        self.alphabet = alphabet
        self.config = config if config is not None else BeamConfig()
        self.lag = lag
        self.lm = lm if lm is not None else UniformLm(alphabet.symbols)
        self.completion_chars = completion_chars
        self._committed = beam_init(alphabet, self.config, self.lm)
        self._pending: deque[np.ndarray] = deque()
        self.frames_seen = 0
        self.beam_steps_last_push = 0

    @property
    def committed_beam(self) -> Beam:
        return self._committed

    def push(self, frame) -> IncrementalOutput:
        """Ingest one emission row; returns the refreshed display state.

        Work per push is bounded by 1 + lag beam steps regardless of how many
        frames the stream has seen.
        """
        row = np.asarray(frame, dtype=np.float64)
        self.frames_seen += 1
        self._pending.append(row)
        steps = 0
        if len(self._pending) > self.lag:
            self._committed = beam_step(
                self._committed, self._pending.popleft(), self.config, self.lm
            )
            steps += 1
        lookahead = self._committed
        for pending_row in self._pending:
            lookahead = beam_step(lookahead, pending_row, self.config, self.lm)
            steps += 1
        self.beam_steps_last_push = steps
        best = lookahead.best
        hypothesis = best.prefix
        return IncrementalOutput(
            frame_index=self.frames_seen,
            committed=self._committed.best.prefix,
            hypothesis=hypothesis,
            completion=lm_complete_word(hypothesis, self.lm, self.completion_chars),
            score=normalized_score(best.log_prob, len(hypothesis), self.config.beta),
        )

    def flush(self) -> str:
        """Commit all buffered rows; the result equals the offline decode."""
        while self._pending:
            self._committed = beam_step(
                self._committed, self._pending.popleft(), self.config, self.lm
            )
        return self._committed.best.prefix

    def best_committed(self) -> tuple[str, float]:
        best = self._committed.best
        return best.prefix, normalized_score(
            best.log_prob, len(best.prefix), self.config.beta
        )


def changes_per_frame(outputs: Sequence[IncrementalOutput | str]) -> float:
    """Mean display churn: character edit distance between consecutive
    lookahead hypotheses (starting from the empty display), divided by the
    number of pushes.  Completions are excluded."""
    if not outputs:
        raise ValidationError("changes_per_frame needs at least one output")
    prev = ""
    total = 0
    for out in outputs:
        cur = out.hypothesis if isinstance(out, IncrementalOutput) else str(out)
        total += edit_distance(prev, cur).distance
        prev = cur
    return total / len(outputs)
