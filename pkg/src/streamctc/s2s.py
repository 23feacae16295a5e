"""Left-to-right beam search over an autoregressive character scorer with
LM shallow fusion and length-normalized ranking.

Hypotheses y are ranked by (log p(y|x) + alpha * log p_LM(y)) / LP(|y|) with
LP(y) = ((5 + |y|) / 6)**beta.  Log-probabilities are negative, so dividing
by LP > 1 raises the score of longer sequences; the formula is applied as
written.  The length penalty is used both for intermediate pruning and for
the final ranking.  Both probabilities include the end-of-sentence term, so
fused scores are comparable across lengths; hypotheses still unfinished at
``max_length`` are force-finalized the same way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import ParseError, ValidationError
from .lm import EOS, CharLm, UniformLm

S2SM_MAGIC = "S2SM v1"
DIST_SUM_TOL = 1e-9


@dataclass(frozen=True)
class S2SConfig:
    width: int = 15
    alpha: float = 0.1
    beta: float = 0.7
    max_length: int = 100

    def __post_init__(self):
        if self.width < 1:
            raise ValidationError("beam width must be >= 1")
        if self.max_length < 1:
            raise ValidationError("max_length must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("alpha and beta must be >= 0")


def length_penalty(length: int, beta: float) -> float:
    """((5 + length) / 6)**beta; equals 1 at length 1 or beta 0."""
    if length < 0:
        raise ValidationError("length must be >= 0")
    return ((5.0 + length) / 6.0) ** beta


class TableScorer:
    """Autoregressive mock scorer backed by a prefix -> distribution table.

    Prefixes not in the table fall back to a uniform distribution over the
    visible characters plus end-of-sentence, so the scorer is total.  States
    are the prefix strings themselves.  Character LMs satisfy the same
    protocol and can stand in as scorers in tests.
    """

    def __init__(self, symbols: str, table: dict[str, dict[str, float]]):
        symbols = "".join(symbols)
        if not symbols or len(set(symbols)) != len(symbols):
            raise ValidationError("scorer characters must be distinct and non-empty")
        self.symbols = symbols
        self._index = {c: i for i, c in enumerate(symbols)}
        self._uniform = np.full(len(symbols) + 1, -np.log(len(symbols) + 1))
        self._uniform.flags.writeable = False
        self._rows: dict[str, np.ndarray] = {}
        for prefix, dist in table.items():
            for ch in prefix:
                if ch not in self._index:
                    raise ValidationError(
                        f"table prefix {prefix!r} uses characters outside the alphabet"
                    )
            probs = np.zeros(len(symbols) + 1)
            for ch, p in dist.items():
                if not 0.0 <= p <= 1.0:
                    raise ValidationError(f"probability {p!r} out of range")
                probs[self.index_of(ch)] = p
            if abs(probs.sum() - 1.0) > DIST_SUM_TOL:
                raise ValidationError(
                    f"distribution for prefix {prefix!r} sums to {probs.sum()!r}"
                )
            with np.errstate(divide="ignore"):
                row = np.log(probs)
            row.flags.writeable = False
            self._rows[prefix] = row
        # kept for serialization round-trips
        self._table = {p: dict(d) for p, d in table.items()}

    def index_of(self, ch: str) -> int:
        if ch == EOS:
            return len(self.symbols)
        idx = self._index.get(ch)
        if idx is None:
            raise ValidationError(f"character {ch!r} is not in the scorer alphabet")
        return idx

    def initial_state(self) -> str:
        return ""

    def next_log_probs(self, state) -> np.ndarray:
        return self._rows.get(state, self._uniform)

    def advance(self, state, ch: str) -> str:
        return state + ch

    def save(self, sink) -> None:
        save_table_scorer(self, sink)

    @classmethod
    def load(cls, source) -> "TableScorer":
        return load_table_scorer(source)


def save_table_scorer(scorer: TableScorer, sink) -> None:
    own = not hasattr(sink, "write")
    fh: IO[str] = open(sink, "w", encoding="utf-8", newline="\n") if own else sink
    try:
        fh.write(f"{S2SM_MAGIC} {scorer.symbols}\n")
        for prefix in sorted(scorer._table):
            dist = scorer._table[prefix]
            for ch in sorted(dist):
                fh.write(f"{prefix}\t{ch}\t{dist[ch]!r}\n")
    finally:
        if own:
            fh.close()


def load_table_scorer(source) -> TableScorer:
    own = not hasattr(source, "read")
    fh: IO[str] = open(source, "r", encoding="utf-8", newline="") if own else source
    try:
        header = fh.readline()
        if not header:
            raise ParseError("empty scorer file", line=1)
        header = header.rstrip("\n")
        parts = header.split(" ", 2)
        if len(parts) != 3 or parts[0] != "S2SM" or parts[1] != "v1":
            raise ParseError(f"bad header {header!r}, expected '{S2SM_MAGIC} ...'", line=1)
        symbols = parts[2]
        table: dict[str, dict[str, float]] = {}
        for lineno, raw in enumerate(fh, start=2):
            raw = raw.rstrip("\n")
            if not raw:
                continue
            fields = raw.split("\t")
            if len(fields) != 3:
                raise ParseError(f"expected 3 tab-separated fields, got {len(fields)}",
                                 line=lineno)
            prefix, ch, prob_str = fields
            try:
                prob = float(prob_str)
            except ValueError as exc:
                raise ParseError(f"bad probability {prob_str!r}", line=lineno) from exc
            dist = table.setdefault(prefix, {})
            if ch in dist:
                raise ParseError(f"duplicate entry for {prefix!r} -> {ch!r}", line=lineno)
            dist[ch] = prob
        try:
            return TableScorer(symbols, table)
        except ValidationError as exc:
            raise ParseError(str(exc)) from exc
    finally:
        if own:
            fh.close()


def s2s_decode(
    scorer, config: S2SConfig | None = None, lm: CharLm | None = None
) -> tuple[str, float]:
    """Beam search over the scorer; returns the best finalized transcript and
    its fused length-normalized score."""
    config = config if config is not None else S2SConfig()
    lm = lm if lm is not None else UniformLm(scorer.symbols)
    if set(lm.symbols) != set(scorer.symbols):
        raise ValidationError("scorer and LM must share a visible alphabet")
    lm_index = [lm.index_of(c) for c in scorer.symbols]
    alpha, beta = config.alpha, config.beta
    eos_sc = len(scorer.symbols)
    eos_lm = len(lm.symbols)

    def fused(lp_sc: float, lp_lm: float, length: int) -> float:
        total = lp_sc + (alpha * lp_lm if alpha else 0.0)
        return total / length_penalty(length, beta)

    # entries: (prefix, scorer state, lm state, log p(y|x), log p_LM(y))
    actives = [("", scorer.initial_state(), lm.initial_state(), 0.0, 0.0)]
    finals: list[tuple[str, float, float]] = []

    for _ in range(config.max_length):
        if not actives:
            break
        pool: list[tuple[float, str, int, tuple]] = []
        for prefix, f_sc, f_lm in finals:
            pool.append((-fused(f_sc, f_lm, len(prefix)), prefix, 0, (prefix, f_sc, f_lm)))
        for prefix, ss, ls, lp_sc, lp_lm in actives:
            sc_vec = scorer.next_log_probs(ss)
            lm_vec = lm.next_log_probs(ls)
            f_sc = lp_sc + float(sc_vec[eos_sc])
            f_lm = lp_lm + float(lm_vec[eos_lm])
            pool.append((-fused(f_sc, f_lm, len(prefix)), prefix, 0, (prefix, f_sc, f_lm)))
            for i, c in enumerate(scorer.symbols):
                n_sc = lp_sc + float(sc_vec[i])
                n_lm = lp_lm + float(lm_vec[lm_index[i]])
                ext = (prefix + c, scorer.advance(ss, c), lm.advance(ls, c), n_sc, n_lm)
                pool.append((-fused(n_sc, n_lm, len(prefix) + 1), prefix + c, 1, ext))
        pool.sort(key=lambda e: (e[0], e[1], e[2]))
        finals = []
        actives = []
        for _, _, kind, payload in pool[: config.width]:
            if kind == 0:
                finals.append(payload)
            else:
                actives.append(payload)

    # Anything still active at the length cap finalizes with its EOS terms.
    for prefix, ss, ls, lp_sc, lp_lm in actives:
        f_sc = lp_sc + float(scorer.next_log_probs(ss)[eos_sc])
        f_lm = lp_lm + float(lm.next_log_probs(ls)[eos_lm])
        finals.append((prefix, f_sc, f_lm))

    ranked = sorted(
        ((-fused(f_sc, f_lm, len(prefix)), prefix) for prefix, f_sc, f_lm in finals),
        key=lambda e: (e[0], e[1]),
    )
    neg_score, prefix = ranked[0]
    return prefix, -neg_score
