"""CLI surface: subcommands, record protocol, exit codes, pipe composition."""

import io
import json
import random

import pytest

from streamctc import cli
from streamctc import (
    Alphabet,
    SimConfig,
    load_emissions,
    save_emissions,
    simulate,
)


def run(capsys, argv, stdin_text=None, monkeypatch=None):
    if stdin_text is not None:
        monkeypatch.setattr("sys.stdin", io.StringIO(stdin_text))
    code = cli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def demo_em(tmp_path):
    ab = Alphabet("hi ")
    em = simulate("hi", ab, SimConfig(peak_prob=1.0, noise_seed=3))
    path = tmp_path / "demo.em"
    save_emissions(em, path)
    return path


@pytest.fixture
def demo_lm(tmp_path):
    corpus = tmp_path / "corpus.txt"
    corpus.write_text("hi hi\nhih i\n", encoding="utf-8")
    out = tmp_path / "model.nglm"
    assert cli.main(["lm-train", str(corpus), "-o", str(out),
                     "--order", "2", "--alphabet", "hi "]) == 0
    return out


class TestDecode:
    def test_certainty_file(self, capsys, demo_em):
        code, out, _ = run(capsys, ["decode", str(demo_em), "--alpha", "0"])
        assert code == 0
        assert out.split("\t")[0] == "hi"

    def test_greedy_flag(self, capsys, demo_em):
        code, out, _ = run(capsys, ["decode", str(demo_em), "--greedy"])
        assert code == 0
        assert out.strip() == "hi"

    def test_with_lm(self, capsys, demo_em, demo_lm):
        code, out, _ = run(capsys, ["decode", str(demo_em), "--lm", str(demo_lm)])
        assert code == 0
        assert out.split("\t")[0] == "hi"

    def test_alpha_without_lm_is_usage_error(self, demo_em, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["decode", str(demo_em)])  # default alpha 0.5
        assert exc.value.code == 2

    def test_missing_file_is_validation_exit(self, capsys):
        code, _, err = run(capsys, ["decode", "no-such-file.em", "--alpha", "0"])
        assert code == 4
        assert "no-such-file" in err


class TestStream:
    def test_records_per_frame_and_final(self, capsys, demo_em, demo_lm, monkeypatch):
        body = demo_em.read_text(encoding="utf-8")
        code, out, _ = run(capsys, ["stream", "--lag", "2", "--lm", str(demo_lm)],
                           stdin_text=body, monkeypatch=monkeypatch)
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        frames = load_emissions(demo_em).num_frames
        assert len(records) == frames + 1
        for i, record in enumerate(records[:-1], start=1):
            assert record["frame"] == i
            assert list(record) == ["frame", "committed", "hypothesis",
                                    "completion", "score"]
        assert records[-1]["final"] is True

    def test_final_record_matches_decode(self, capsys, demo_em, demo_lm, monkeypatch):
        body = demo_em.read_text(encoding="utf-8")
        code, out, _ = run(capsys, ["stream", "--lag", "5", "--lm", str(demo_lm)],
                           stdin_text=body, monkeypatch=monkeypatch)
        final = json.loads(out.splitlines()[-1])
        code2, out2, _ = run(capsys, ["decode", str(demo_em), "--lm", str(demo_lm)])
        text, score = out2.rstrip("\n").split("\t")
        assert final["hypothesis"] == text
        assert final["score"] == pytest.approx(float(score), abs=1e-6)

    def test_zero_lag_commits_every_frame(self, capsys, demo_em, monkeypatch):
        body = demo_em.read_text(encoding="utf-8")
        code, out, _ = run(capsys, ["stream", "--lag", "0", "--alpha", "0"],
                           stdin_text=body, monkeypatch=monkeypatch)
        assert code == 0
        for line in out.splitlines():
            record = json.loads(line)
            assert record["committed"] == record["hypothesis"]

    def test_start_frame_replays_from_middle(self, capsys, demo_em, monkeypatch):
        body = demo_em.read_text(encoding="utf-8")
        total = load_emissions(demo_em).num_frames
        skip = 4
        code, out, _ = run(capsys,
                           ["stream", "--lag", "0", "--alpha", "0",
                            "--start-frame", str(skip)],
                           stdin_text=body, monkeypatch=monkeypatch)
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert len(records) == total - skip + 1
        assert records[0]["frame"] == skip + 1  # absolute frame numbering

    def test_malformed_row_emits_error_record(self, capsys, monkeypatch):
        body = "CTCEM v1 1 2 a-\nnot a row\n"
        code, out, err = run(capsys, ["stream", "--lag", "0", "--alpha", "0"],
                             stdin_text=body, monkeypatch=monkeypatch)
        assert code == 3
        assert "error" in json.loads(out.splitlines()[-1])

    def test_non_stochastic_row_is_validation_exit(self, capsys, monkeypatch):
        body = "CTCEM v1 1 2 a-\n0.9 0.6\n"
        code, out, _ = run(capsys, ["stream", "--lag", "0", "--alpha", "0"],
                           stdin_text=body, monkeypatch=monkeypatch)
        assert code == 4
        assert "error" in json.loads(out.splitlines()[-1])

    def test_missing_header(self, capsys, monkeypatch):
        code, _, err = run(capsys, ["stream", "--alpha", "0"], stdin_text="",
                           monkeypatch=monkeypatch)
        assert code == 3


class TestLmTrain:
    def test_writes_model(self, demo_lm):
        head = demo_lm.read_text(encoding="utf-8").splitlines()[0]
        assert head == "NGLM v1 2 1.0 hi "


class TestMetrics:
    def test_identity_pairs(self, capsys, tmp_path):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("we did\twe did\nhome\thome\n", encoding="utf-8")
        code, out, _ = run(capsys, ["metrics", str(pairs)])
        assert code == 0
        assert "WER 0.0000" in out
        assert "CER 0.0000" in out
        assert "skipped 0" in out

    def test_aggregate_and_skipped(self, capsys, tmp_path):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text(
            "home to an animal\thome you and animal\n"
            "\tstray hypothesis\n",
            encoding="utf-8",
        )
        code, out, _ = run(capsys, ["metrics", str(pairs)])
        assert code == 0
        assert "WER 0.5000" in out
        assert "skipped 1" in out

    def test_confusion_flag(self, capsys, tmp_path):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("vf\tff\nvv\tfv\n", encoding="utf-8")
        code, out, _ = run(capsys, ["metrics", str(pairs), "--confusion"])
        assert code == 0
        assert "v\tf\t1.0000" in out

    def test_malformed_line(self, capsys, tmp_path):
        pairs = tmp_path / "pairs.tsv"
        pairs.write_text("no tab here\n", encoding="utf-8")
        code, _, err = run(capsys, ["metrics", str(pairs)])
        assert code == 3


class TestOracle:
    def test_uniform_matrix(self, capsys, tmp_path):
        path = tmp_path / "uniform.em"
        path.write_text("CTCEM v1 2 2 a-\n0.5 0.5\n0.5 0.5\n", encoding="utf-8")
        code, out, _ = run(capsys, ["oracle", str(path)])
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "0.75\ta"
        assert lines[1] == "0.25\t"

    def test_capacity_guard(self, capsys, tmp_path):
        path = tmp_path / "big.em"
        rows = "0.25 0.25 0.25 0.25\n" * 15  # 4**15 paths, over the guard
        path.write_text("CTCEM v1 15 4 abc-\n" + rows, encoding="utf-8")
        code, _, err = run(capsys, ["oracle", str(path)])
        assert code == 4
        assert "guard" in err


class TestSimulateAndRf:
    def test_simulate_stdout_parses(self, capsys):
        code, out, _ = run(capsys, ["simulate", "ab", "--alphabet", "ab",
                                    "--peak", "0.9", "--seed", "5"])
        assert code == 0
        em = load_emissions(io.StringIO(out))
        assert em.alphabet.symbols == "ab"

    def test_simulate_deterministic(self, capsys, tmp_path):
        a, b = tmp_path / "a.em", tmp_path / "b.em"
        for target in (a, b):
            assert cli.main(["simulate", "hello there", "--seed", "9",
                             "-o", str(target)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_rf_compact_form(self, capsys):
        code, out, _ = run(capsys, ["rf", "5x11"])
        assert code == 0
        assert out.strip() == "r=22 R=45"

    def test_rf_explicit_widths(self, capsys):
        code, out, _ = run(capsys, ["rf", "5", "5", "3"])
        assert code == 0
        assert out.strip() == "r=5 R=11"

    def test_rf_even_width_fails(self, capsys):
        code, _, err = run(capsys, ["rf", "4"])
        assert code == 4


class TestS2SDecode:
    def test_mock_scorer(self, capsys, tmp_path):
        path = tmp_path / "scorer.s2sm"
        path.write_text(
            "S2SM v1 hi\n\th\t1.0\nh\ti\t1.0\nhi\t</s>\t1.0\n",
            encoding="utf-8",
        )
        code, out, _ = run(capsys, ["s2s-decode", str(path), "--alpha", "0"])
        assert code == 0
        assert out.split("\t")[0] == "hi"


class TestPipeComposition:
    def test_simulate_stream_decode_agree(self, capsys, monkeypatch, tmp_path):
        rng = random.Random(77)
        letters = "abcdefg"
        for case in range(50):
            words = [
                "".join(rng.choice(letters) for _ in range(1 + rng.randrange(4)))
                for _ in range(1 + rng.randrange(2))
            ]
            sentence = " ".join(words)
            em_path = tmp_path / f"case{case}.em"
            assert cli.main(["simulate", sentence, "--alphabet", letters + " ",
                             "--peak", "0.92", "--seed", str(case),
                             "-o", str(em_path)]) == 0
            body = em_path.read_text(encoding="utf-8")
            code, out, _ = run(capsys,
                               ["stream", "--lag", "3", "--alpha", "0",
                                "--beam-width", "16"],
                               stdin_text=body, monkeypatch=monkeypatch)
            assert code == 0
            final = json.loads(out.splitlines()[-1])
            code, out, _ = run(capsys, ["decode", str(em_path), "--alpha", "0",
                                        "--beam-width", "16"])
            text, score = out.rstrip("\n").split("\t")
            assert final["hypothesis"] == text
            assert final["score"] == pytest.approx(float(score), abs=1e-6)


class TestVersion:
    def test_version_lists_formats(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["--version"])
        assert exc.value.code == 0
        out = capsys.readouterr().out
        for fmt in ("CTCEM v1", "NGLM v1", "S2SM v1"):
            assert fmt in out
