"""Command-line front end: offline decoding, streaming over a line protocol,
LM training, oracle checks, metrics, simulation, and receptive-field math.

Exit codes: 0 ok, 2 usage, 3 parse failure, 4 validation failure.
Set STREAMCTC_LOG=debug (or info/warning) for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .beam import BeamConfig, beam_decode
from .ctc import Alphabet, enumerate_transcript_probabilities, greedy_decode
from .errors import CapacityError, ParseError, ValidationError
from .lm import load_ngram, save_ngram, train_ngram
from .metrics import _words, confusion_matrix, edit_distance
from .s2s import S2SConfig, load_table_scorer, s2s_decode
from .simulate import (
    SimConfig,
    load_emissions,
    parse_emission_row,
    parse_emissions_header,
    save_emissions,
    simulate,
)
from .streaming import StreamingDecoder, receptive_field

log = logging.getLogger("streamctc")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_VALIDATION = 4

FORMAT_VERSIONS = "CTCEM v1, NGLM v1, S2SM v1"

#: Lowercase letters, apostrophe, and the word separator; 28 visible
#: characters, so emission rows have 29 entries.
DEFAULT_ALPHABET = "abcdefghijklmnopqrstuvwxyz' "


def _add_fusion_flags(p: argparse.ArgumentParser, width: int, alpha: float, beta: float):
    p.add_argument("--lm", metavar="FILE", help="NGLM v1 language model for shallow fusion")
    p.add_argument("--beam-width", type=int, default=width, metavar="W")
    p.add_argument("--alpha", type=float, default=alpha, help="LM weight")
    p.add_argument("--beta", type=float, default=beta, help="length-penalty exponent")


def _load_lm(args, parser: argparse.ArgumentParser):
    """LM is mandatory whenever fusion is active (alpha > 0)."""
    if args.lm:
        lm = load_ngram(args.lm)
        log.debug("loaded LM: order=%d k=%r |symbols|=%d", lm.order, lm.k, len(lm.symbols))
        return lm
    if args.alpha > 0:
        parser.error("--alpha > 0 requires --lm (or pass --alpha 0)")
    return None


def _cmd_decode(args, parser) -> int:
    em = load_emissions(args.emissions)
    log.info("decoding %d frames over %d symbols", em.num_frames, em.alphabet.size)
    if args.greedy:
        print(greedy_decode(em))
        return EXIT_OK
    lm = _load_lm(args, parser)
    config = BeamConfig(width=args.beam_width, alpha=args.alpha, beta=args.beta)
    text, score = beam_decode(em, config, lm)
    print(f"{text}\t{score:.6f}")
    return EXIT_OK


def _stream_records(args, parser, stdin, stdout) -> int:
    header = stdin.readline()
    if not header:
        raise ParseError("missing header line on standard input", line=1)
    alphabet, _ = parse_emissions_header(header)
    lm = _load_lm(args, parser)
    config = BeamConfig(width=args.beam_width, alpha=args.alpha, beta=args.beta)
    # word completions come from the LM; without one there is nothing to say
    decoder = StreamingDecoder(alphabet, config, lag=args.lag, lm=lm,
                               completion_chars=16 if lm else 0)
    skip = args.start_frame
    lineno = 1
    for raw in iter(stdin.readline, ""):
        lineno += 1
        line = raw.rstrip("\n")
        if not line:
            continue
        if skip > 0:
            skip -= 1
            continue
        row = parse_emission_row(line, alphabet.size, lineno)
        out = decoder.push(row)
        record = {
            "frame": args.start_frame + out.frame_index,
            "committed": out.committed,
            "hypothesis": out.hypothesis,
            "completion": out.completion,
            "score": round(out.score, 6),
        }
        print(json.dumps(record), file=stdout, flush=True)
    text = decoder.flush()
    _, score = decoder.best_committed()
    final = {
        "frame": args.start_frame + decoder.frames_seen,
        "committed": text,
        "hypothesis": text,
        "completion": "",
        "score": round(score, 6),
        "final": True,
    }
    print(json.dumps(final), file=stdout, flush=True)
    return EXIT_OK


def _cmd_stream(args, parser) -> int:
    try:
        return _stream_records(args, parser, sys.stdin, sys.stdout)
    except ParseError as exc:
        print(json.dumps({"error": str(exc)}), flush=True)
        raise
    except (ValidationError, CapacityError) as exc:
        print(json.dumps({"error": str(exc)}), flush=True)
        raise


def _cmd_lm_train(args, parser) -> int:
    with open(args.corpus, "r", encoding="utf-8") as fh:
        lm = train_ngram(fh, args.alphabet, order=args.order, k=args.k)
    save_ngram(lm, args.output)
    log.info("trained order-%d model with %d contexts", lm.order, len(lm._counts))
    return EXIT_OK


def _cmd_metrics(args, parser) -> int:
    pairs = []
    skipped = 0
    with open(args.pairs, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise ParseError(f"expected 'ref<TAB>hyp', got {len(fields)} fields",
                                 line=lineno)
            ref, hyp = fields
            if not ref.strip():
                skipped += 1
                continue
            pairs.append((ref, hyp))
    if not pairs:
        raise ValidationError("no scorable pairs (every reference was empty)")
    word_edits = word_total = char_edits = char_total = 0
    for ref, hyp in pairs:
        ref_words, hyp_words = _words(ref), _words(hyp)
        word_edits += edit_distance(ref_words, hyp_words).distance
        word_total += len(ref_words)
        ref_chars, hyp_chars = list(ref.strip()), list(hyp.strip())
        char_edits += edit_distance(ref_chars, hyp_chars).distance
        char_total += len(ref_chars)
    print(f"WER {word_edits / word_total:.4f}")
    print(f"CER {char_edits / char_total:.4f}")
    print(f"skipped {skipped}")
    if args.confusion:
        matrix = confusion_matrix(pairs)
        for i, ref_char in enumerate(matrix.symbols):
            for j, hyp_char in enumerate(matrix.symbols):
                if matrix.counts[i, j]:
                    print(f"{ref_char}\t{hyp_char}\t{matrix.rates[i, j]:.4f}")
    return EXIT_OK


def _cmd_oracle(args, parser) -> int:
    em = load_emissions(args.emissions)
    dist = enumerate_transcript_probabilities(em)
    ranked = sorted(dist.items(), key=lambda kv: (-kv[1], kv[0]))
    for text, prob in ranked[: args.top]:
        print(f"{prob:.10g}\t{text}")
    return EXIT_OK


def _cmd_simulate(args, parser) -> int:
    alphabet = Alphabet(args.alphabet)
    config = SimConfig(
        peak_prob=args.peak,
        frames_per_char=args.frames_per_char,
        noise_seed=args.seed,
        blank_fill=not args.no_blank_fill,
    )
    em = simulate(args.text, alphabet, config)
    log.info("simulated %d frames for %r", em.num_frames, args.text)
    if args.output:
        save_emissions(em, args.output)
    else:
        save_emissions(em, sys.stdout)
    return EXIT_OK


def _cmd_rf(args, parser) -> int:
    widths: list[int] = []
    for token in args.widths:
        token = token.lower()
        try:
            if "x" in token:
                width_str, count_str = token.split("x", 1)
                widths.extend([int(width_str)] * int(count_str))
            else:
                widths.append(int(token))
        except ValueError:
            parser.error(f"bad width token {token!r}; use an integer or KxLAYERS")
    total, future = receptive_field(widths)
    print(f"r={future} R={total}")
    return EXIT_OK


def _cmd_s2s_decode(args, parser) -> int:
    scorer = load_table_scorer(args.scorer)
    lm = _load_lm(args, parser)
    config = S2SConfig(width=args.beam_width, alpha=args.alpha, beta=args.beta,
                       max_length=args.max_length)
    text, score = s2s_decode(scorer, config, lm)
    print(f"{text}\t{score:.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamctc",
        description="Streaming CTC decoding toolkit",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"streamctc {__version__} (formats: {FORMAT_VERSIONS})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="offline beam decode of a CTCEM file")
    p.add_argument("emissions", help="CTCEM v1 file")
    p.add_argument("--greedy", action="store_true",
                   help="collapse the per-frame argmax path instead of beam search")
    _add_fusion_flags(p, width=100, alpha=0.5, beta=0.1)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("stream", help="decode emission rows from stdin, one record per frame")
    p.add_argument("--lag", "-r", type=int, default=22,
                   help="frames to buffer before committing (default 22)")
    p.add_argument("--start-frame", type=int, default=0, metavar="N",
                   help="discard the first N rows and decode from a fresh state")
    _add_fusion_flags(p, width=100, alpha=0.5, beta=0.1)
    p.set_defaults(func=_cmd_stream)

    p = sub.add_parser("lm-train", help="train an add-k smoothed character n-gram model")
    p.add_argument("corpus", help="UTF-8 text, one sentence per line")
    p.add_argument("--output", "-o", required=True, help="NGLM v1 output file")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--k", type=float, default=1.0, help="add-k smoothing constant")
    p.add_argument("--alphabet", default=DEFAULT_ALPHABET)
    p.set_defaults(func=_cmd_lm_train)

    p = sub.add_parser("metrics", help="WER/CER over a 'ref<TAB>hyp' pairs file")
    p.add_argument("pairs")
    p.add_argument("--confusion", action="store_true",
                   help="also print nonzero substitution-confusion entries")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("oracle", help="top transcripts by exact path-enumeration probability")
    p.add_argument("emissions", help="CTCEM v1 file (small: the oracle enumerates paths)")
    p.add_argument("--top", type=int, default=10)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("simulate", help="write synthetic emissions for a ground-truth text")
    p.add_argument("text")
    p.add_argument("--output", "-o", help="CTCEM v1 output file (default: stdout)")
    p.add_argument("--alphabet", default=DEFAULT_ALPHABET)
    p.add_argument("--peak", type=float, default=0.9)
    p.add_argument("--frames-per-char", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-blank-fill", action="store_true",
                   help="only insert blank frames where repeats force them")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("rf", help="receptive field of a temporal convolution stack")
    p.add_argument("widths", nargs="+",
                   help="filter widths, either one per layer or KxLAYERS (e.g. 5x11)")
    p.set_defaults(func=_cmd_rf)

    p = sub.add_parser("s2s-decode", help="beam decode an S2SM v1 mock scorer")
    p.add_argument("scorer", help="S2SM v1 file")
    p.add_argument("--max-length", type=int, default=100)
    _add_fusion_flags(p, width=15, alpha=0.1, beta=0.7)
    p.set_defaults(func=_cmd_s2s_decode)

    return parser


def _configure_logging() -> None:
    level_name = os.environ.get("STREAMCTC_LOG", "").strip().upper()
    if level_name:
        level = getattr(logging, level_name, logging.INFO)
        logging.basicConfig(level=level, stream=sys.stderr,
                            format="%(name)s %(levelname)s %(message)s")


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except ParseError as exc:
        print(f"streamctc: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValidationError, CapacityError) as exc:
        print(f"streamctc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"streamctc: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BrokenPipeError:
        # downstream consumer (e.g. head) closed the pipe; suppress the
        # interpreter's shutdown flush complaint as well
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
