"""End-to-end checks of the command surface: exit codes, determinism,
output schemas, and the no-network guarantee of --mock-llm runs."""

import hashlib
import json
import socket
import subprocess

import numpy as np
import pytest

from aqakit.cli import main
from aqakit.evaluate import JUDGE_PROMPT
from aqakit.model import AudioTextLm, DecoderConfig, save_checkpoint
from aqakit.synthetic import write_demo_corpus


@pytest.fixture(scope="module")
def demo_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("demo")
    write_demo_corpus(root)
    return root


def _sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonl(path, rows):
    path.write_text("".join(json.dumps(r) + "\n" for r in rows),
                    encoding="utf-8")
    return path


# -- dispatch and exit codes ------------------------------------------------------

def test_no_subcommand_is_usage_error(capsys):
    assert main([]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_subcommand_exits_1(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_unknown_flag_exits_1_with_usage(demo_dir, capsys):
    code = main(["stats", "--manifest", str(demo_dir / "manifest.jsonl"),
                 "--bogus", "1"])
    assert code == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_missing_required_flag_exits_1(capsys):
    assert main(["stats"]) == 1
    assert "usage" in capsys.readouterr().err.lower()


def test_dataset_subcommands_require_out(demo_dir, capsys):
    code = main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl")])
    assert code == 1
    assert "--out" in capsys.readouterr().err


def test_missing_input_file_is_runtime_error(tmp_path):
    code = main(["forge-closed", "--meta", str(tmp_path / "nope.jsonl"),
                 "--out", str(tmp_path / "x.jsonl")])
    assert code == 2


def test_real_llm_without_url_exits_1(demo_dir, tmp_path, capsys):
    code = main(["forge-open", "--meta", str(demo_dir / "meta.jsonl"),
                 "--out", str(tmp_path / "open.jsonl")])
    assert code == 1
    assert "--llm-url" in capsys.readouterr().err


def test_console_script_installed(demo_dir):
    proc = subprocess.run(
        ["aqakit", "stats", "--manifest", str(demo_dir / "manifest.jsonl")],
        capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["total_pairs"] == 200


# -- forging ----------------------------------------------------------------------

def test_forge_closed_reruns_byte_identical(demo_dir, tmp_path, capsys):
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    for out in (a, b):
        assert main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl"),
                     "--seed", "7", "--out", str(out)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 200


def test_forge_closed_seed_changes_draws(demo_dir, tmp_path, capsys):
    a = tmp_path / "s7.jsonl"
    b = tmp_path / "s8.jsonl"
    main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl"),
          "--seed", "7", "--out", str(a)])
    main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl"),
          "--seed", "8", "--out", str(b)])
    capsys.readouterr()
    assert a.read_bytes() != b.read_bytes()


def test_forge_closed_does_not_mutate_inputs(demo_dir, tmp_path, capsys):
    meta = demo_dir / "meta.jsonl"
    before = _sha(meta)
    main(["forge-closed", "--meta", str(meta),
          "--out", str(tmp_path / "o.jsonl")])
    capsys.readouterr()
    assert _sha(meta) == before


def test_forge_closed_leaves_no_temp_files(demo_dir, tmp_path, capsys):
    main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl"),
          "--out", str(tmp_path / "deep" / "o.jsonl")])
    capsys.readouterr()
    names = {p.name for p in (tmp_path / "deep").iterdir()}
    assert names == {"o.jsonl"}


def test_forge_open_mock_writes_valid_rows(demo_dir, tmp_path, capsys):
    out = tmp_path / "open.jsonl"
    assert main(["forge-open", "--meta", str(demo_dir / "meta.jsonl"),
                 "--mock-llm", "--out", str(out)]) == 0
    capsys.readouterr()
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert rows
    for r in rows:
        assert r["task"] == "open_ended"
        assert not r["closed"]
        assert r["question"] and r["answer"]


def test_forge_features_then_closed_consumes_bank(demo_dir, tmp_path, capsys):
    bank = tmp_path / "bank.json"
    assert main(["forge-features", "--meta", str(demo_dir / "meta.jsonl"),
                 "--mock-llm", "--out", str(bank)]) == 0
    cached = json.loads(bank.read_text())
    assert cached and all(len(v) == 10 for v in cached.values())
    out = tmp_path / "closed.jsonl"
    assert main(["forge-closed", "--meta", str(demo_dir / "meta.jsonl"),
                 "--feature-bank", str(bank), "--out", str(out)]) == 0
    capsys.readouterr()
    rows = [json.loads(l) for l in out.read_text().splitlines()
            if json.loads(l)["task"] == "acoustic_features"]
    assert any("feature-" in r["answer"] for r in rows)


def test_mock_llm_never_opens_network(demo_dir, tmp_path, monkeypatch,
                                      capsys):
    def boom(*args, **kwargs):
        raise AssertionError("network touched during --mock-llm run")

    monkeypatch.setattr(socket, "socket", boom)
    monkeypatch.setattr(socket, "create_connection", boom)
    assert main(["forge-open", "--meta", str(demo_dir / "meta.jsonl"),
                 "--mock-llm", "--out", str(tmp_path / "o.jsonl")]) == 0
    assert main(["forge-features", "--meta", str(demo_dir / "meta.jsonl"),
                 "--mock-llm", "--out", str(tmp_path / "b.json")]) == 0
    preds = _jsonl(tmp_path / "p.jsonl",
                   [{"audio_id": "a", "question": "q?", "output": "yes"}])
    assert main(["eval-judge", "--pred", str(preds), "--mock-llm"]) == 0
    capsys.readouterr()


def test_sample_audioset_prefers_rare_classes(tmp_path, capsys):
    labels_of = {f"clip{i:02d}": ["common"] for i in range(36)}
    labels_of.update({f"clip{i:02d}": ["rare"] for i in range(36, 40)})
    labels = tmp_path / "labels.json"
    labels.write_text(json.dumps(labels_of), encoding="utf-8")
    out = tmp_path / "picked.txt"
    assert main(["sample-audioset", "--labels", str(labels),
                 "--n", "8", "--out", str(out)]) == 0
    capsys.readouterr()
    picked = out.read_text().split()
    assert len(picked) == 8
    assert {"clip36", "clip37", "clip38", "clip39"} <= set(picked)


# -- stats and validate -----------------------------------------------------------

def test_stats_unique_question_fraction_worked_example(tmp_path, capsys):
    # four questions, one duplicated: 3 distinct of 4
    rows = [{"audio_id": c, "question": q, "answer": a,
             "task": "classification", "closed": True, "unanswerable": False}
            for c, q, a in [("a", "What is this?", "dog"),
                            ("b", "What is this?", "cat"),
                            ("c", "Describe it.", "a dog barks"),
                            ("d", "Any bees here?", "no")]]
    manifest = _jsonl(tmp_path / "m.jsonl", rows)
    assert main(["stats", "--manifest", str(manifest)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["unique_question_fraction"] == 0.75
    assert report["total_pairs"] == 4


def test_stats_does_not_mutate_manifest(demo_dir, capsys):
    manifest = demo_dir / "manifest.jsonl"
    before = _sha(manifest)
    main(["stats", "--manifest", str(manifest)])
    capsys.readouterr()
    assert _sha(manifest) == before


def test_validate_clean_manifest_exits_0(demo_dir, capsys):
    assert main(["validate", "--manifest",
                 str(demo_dir / "manifest.jsonl")]) == 0
    assert "0 violations" in capsys.readouterr().err


def test_validate_reports_planted_errors(tmp_path, capsys):
    good = {"audio_id": "a", "question": "q?", "answer": "x",
            "task": "caption", "closed": True, "unanswerable": False}
    rows = [dict(good) for _ in range(10)]
    del rows[2]["answer"]                 # missing field
    rows[5]["task"] = "interpretive_dance"  # outside the task vocabulary
    rows[8]["closed"] = "yes"             # wrong type
    manifest = _jsonl(tmp_path / "m.jsonl", rows)
    assert main(["validate", "--manifest", str(manifest)]) == 1
    out = capsys.readouterr().out
    flagged = [l for l in out.splitlines() if l.startswith("line ")]
    assert len(flagged) == 3
    assert [l.split(":")[0] for l in flagged] == ["line 3", "line 6",
                                                  "line 9"]


def test_validate_unreadable_file_exits_2(tmp_path):
    assert main(["validate", "--manifest", str(tmp_path / "gone.jsonl")]) == 2


# -- train and answer -------------------------------------------------------------

def test_train_then_answer_roundtrip(demo_dir, tmp_path, capsys):
    run = tmp_path / "run"
    code = main(["train", "--manifest", str(demo_dir / "manifest.jsonl"),
                 "--audio-dir", str(demo_dir / "audio"),
                 "--factor", "1e-5", "--batch", "8", "--seed", "0",
                 "--out", str(run)])
    assert code == 0
    reports = [json.loads(l) for l in
               (run / "stage_reports.jsonl").read_text().splitlines()]
    assert [r["stage"] for r in reports] == [1, 2, 3, 4]
    for n in range(1, 5):
        assert (run / f"stage{n}" / "manifest.txt").exists()
    wav = next((demo_dir / "audio").glob("*.wav"))
    assert main(["answer", "--audio", str(wav),
                 "--question", "classify the sound events in the audio clip",
                 "--ckpt", str(run / "stage4"),
                 "--max-new-tokens", "8"]) == 0
    line = capsys.readouterr().out.strip()
    record = json.loads(line)
    assert set(record) == {"audio_id", "question", "output"}
    assert record["audio_id"] == wav.stem
    assert record["question"] == \
        "classify the sound events in the audio clip"
    assert isinstance(record["output"], str)


def test_answer_writes_single_json_line_to_out(demo_dir, tmp_path, capsys):
    ckpt = tmp_path / "ckpt"
    save_checkpoint(ckpt, AudioTextLm(DecoderConfig(), seed=0))
    wav = next((demo_dir / "audio").glob("*.wav"))
    out = tmp_path / "ans.jsonl"
    assert main(["answer", "--audio", str(wav), "--question", "what is it?",
                 "--ckpt", str(ckpt), "--max-new-tokens", "4",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    lines = out.read_text().splitlines()
    assert len(lines) == 1
    assert set(json.loads(lines[0])) == {"audio_id", "question", "output"}


def test_answer_is_reproducible_under_seed(demo_dir, tmp_path, capsys):
    ckpt = tmp_path / "ckpt"
    save_checkpoint(ckpt, AudioTextLm(DecoderConfig(), seed=0))
    wav = next((demo_dir / "audio").glob("*.wav"))
    outs = []
    for _ in range(2):
        assert main(["answer", "--audio", str(wav), "--question", "q?",
                     "--ckpt", str(ckpt), "--max-new-tokens", "8",
                     "--seed", "3"]) == 0
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


# -- evaluation -------------------------------------------------------------------

@pytest.fixture()
def eval_files(tmp_path):
    preds = _jsonl(tmp_path / "preds.jsonl", [
        {"audio_id": "a", "question": "What animal is this?",
         "output": "a dog barking loudly"},
        {"audio_id": "b", "question": "What animal is this?",
         "output": "cat meowing"},
        {"audio_id": "c", "question": "What animal is this?",
         "output": "a dog growls"},
    ])
    truth = _jsonl(tmp_path / "truth.jsonl", [
        {"audio_id": "a", "labels": "dog", "caption": ["a dog barks loudly"],
         "order": ["dog", "cat"], "count": 2},
        {"audio_id": "b", "labels": "cat", "caption": "cat meowing",
         "order": ["cat", "dog"], "count": 1},
        {"audio_id": "c", "labels": "dog", "caption": ["a dog growls"],
         "order": ["dog", "cat"], "count": 4},
    ])
    labels = tmp_path / "labels.txt"
    labels.write_text("dog\ncat\n", encoding="utf-8")
    return preds, truth, labels


def test_eval_classify_clean_fixture(eval_files, capsys):
    preds, truth, labels = eval_files
    assert main(["eval-classify", "--pred", str(preds), "--truth", str(truth),
                 "--labels", str(labels)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n"] == 3
    assert report["accuracy"] == 1.0
    assert report["micro_f1"] == 1.0
    assert report["map"] == 1.0


def test_eval_classify_rejects_unknown_truth_label(eval_files, tmp_path,
                                                   capsys):
    preds, _, labels = eval_files
    truth = _jsonl(tmp_path / "bad_truth.jsonl",
                   [{"audio_id": "a", "labels": "walrus"},
                    {"audio_id": "b", "labels": "cat"},
                    {"audio_id": "c", "labels": "dog"}])
    assert main(["eval-classify", "--pred", str(preds), "--truth", str(truth),
                 "--labels", str(labels)]) == 1
    assert "walrus" in capsys.readouterr().err


def test_eval_caption_exact_overlap_mean(tmp_path, capsys):
    # 3/4 token overlap on both sides -> F1 0.75 for the single row
    preds = _jsonl(tmp_path / "p.jsonl",
                   [{"audio_id": "a", "question": "q",
                     "output": "a dog barking loudly"}])
    truth = _jsonl(tmp_path / "t.jsonl",
                   [{"audio_id": "a", "caption": "a dog barks loudly"}])
    assert main(["eval-caption", "--pred", str(preds),
                 "--truth", str(truth)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["caption_f1_mean"] - 0.75) < 1e-12
    assert report["n"] == 1


def test_eval_judge_mock_replay_rate(eval_files, tmp_path, capsys):
    preds, _, _ = eval_files
    replay = {}
    for i, row in enumerate(json.loads(l)
                            for l in preds.read_text().splitlines()):
        prompt = (f"{JUDGE_PROMPT}\n\nQuestion: {row['question']}\n"
                  f"Response: {row['output']}")
        replay[prompt] = "No." if i == 0 else "Yes, clearly."
    responses = tmp_path / "replay.json"
    responses.write_text(json.dumps(replay), encoding="utf-8")
    assert main(["eval-judge", "--pred", str(preds), "--mock-llm",
                 "--responses", str(responses)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_yes"] == 2
    assert report["n_no"] == 1
    assert abs(report["rate"] - 2 / 3) < 1e-12


def test_probe_order_counts_exclusions(eval_files, tmp_path, capsys):
    _, truth, _ = eval_files
    preds = _jsonl(tmp_path / "op.jsonl", [
        {"audio_id": "a", "question": "q",
         "output": "The dog comes first, then the cat."},
        {"audio_id": "b", "question": "q", "output": "hard to say"},
        {"audio_id": "c", "question": "q",
         "output": "The first sound is a cat."},
    ])
    assert main(["probe", "--kind", "order", "--pred", str(preds),
                 "--truth", str(truth)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_followed"] == 2
    assert report["n_excluded"] == 1
    assert abs(report["order_accuracy"] - 0.5) < 1e-12


def test_probe_counting_linearity(tmp_path, capsys):
    preds = _jsonl(tmp_path / "cp.jsonl", [
        {"audio_id": "a", "question": "q", "output": "I hear 2 barks."},
        {"audio_id": "b", "question": "q", "output": "It rings twice... 2."},
        {"audio_id": "c", "question": "q", "output": "4 distinct thuds"},
        {"audio_id": "d", "question": "q", "output": "four knocks, I mean 4"},
    ])
    truth = _jsonl(tmp_path / "ct.jsonl", [
        {"audio_id": "a", "count": 1}, {"audio_id": "b", "count": 1},
        {"audio_id": "c", "count": 2}, {"audio_id": "d", "count": 2},
    ])
    assert main(["probe", "--kind", "counting", "--pred", str(preds),
                 "--truth", str(truth)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_used"] == 4
    assert abs(report["pearson_r"] - 1.0) < 1e-12
    assert abs(report["double_single_ratio"] - 2.0) < 1e-12


def test_eval_pred_truth_id_mismatch_exits_1(eval_files, tmp_path, capsys):
    preds, _, _ = eval_files
    truth = _jsonl(tmp_path / "t.jsonl", [{"audio_id": "zz", "caption": "x"}])
    assert main(["eval-caption", "--pred", str(preds),
                 "--truth", str(truth)]) == 1
