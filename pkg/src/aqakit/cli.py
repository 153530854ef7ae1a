"""Operator surface: one executable, subcommands over the library modules.

Exit codes: 0 success, 1 validation error (including bad flags, with usage on
stderr), 2 runtime or client error. Progress goes to stderr; machine-readable
results go to stdout or --out. Output files are written atomically (temp file
plus rename) and input files are never mutated.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

__all__ = ["main"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the contract wants 1 with usage text
    def error(self, message):
        raise UsageError(f"{message}\n{self.format_usage()}")


def _eprint(*args):
    print(*args, file=sys.stderr)


def _atomic_write(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(out, text if text.endswith("\n") else text + "\n")
    else:
        print(text)


def _read_jsonl(path: str) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: bad JSON: {exc}") from exc
    return rows


def _manifest_text(pairs) -> str:
    from .forge import qa_to_dict
    return "".join(json.dumps(qa_to_dict(p), ensure_ascii=False) + "\n"
                   for p in pairs)


def _make_llm_client(args, mock_kind: str = "synth"):
    # mock_kind picks what the offline client should sound like: "synth"
    # emits schema-correct QA text for the forge commands, "judge" answers yes
    if args.mock_llm:
        from .forge import ReplayLlmClient, SynthLlmClient
        fallback = (lambda _prompt: "yes") if mock_kind == "judge" else None
        if getattr(args, "responses", None):
            with open(args.responses, encoding="utf-8") as fh:
                recorded = json.load(fh)
            return ReplayLlmClient(recorded, fallback=fallback)
        if mock_kind == "judge":
            return ReplayLlmClient({}, fallback=fallback)
        return SynthLlmClient()
    from .forge import RealLlmClient
    if not args.llm_url:
        raise UsageError("--llm-url is required without --mock-llm")
    return RealLlmClient(args.llm_url, api_key_env=args.api_key_env)


def _make_provider(args):
    from .evaluate import HashedBagOfWordsProvider, RemoteEmbeddingProvider
    if args.provider == "hashed":
        return HashedBagOfWordsProvider()
    if not args.llm_url:
        raise UsageError("--llm-url is required with --provider remote")
    return RemoteEmbeddingProvider(args.llm_url, api_key_env=args.api_key_env)


# -- subcommands -----------------------------------------------------------------

def _cmd_forge_closed(args) -> int:
    from .forge import (gen_acoustic_feature_qa, gen_caption_qa,
                        gen_classification_qa, gen_temporal_qa,
                        load_feature_bank, read_meta_jsonl)
    metas = read_meta_jsonl(args.meta)
    bank = load_feature_bank(args.feature_bank) if args.feature_bank else None
    pairs = []
    skipped = 0
    for i, meta in enumerate(metas):
        rng = np.random.default_rng([args.seed, i])
        pairs.append(gen_classification_qa(meta, None, rng))
        try:
            pairs.append(gen_acoustic_feature_qa(meta, rng, feature_bank=bank))
        except ValueError:
            skipped += 1
        pairs.extend(gen_caption_qa(meta, rng))
        pairs.extend(gen_temporal_qa(meta, rng))
    if skipped:
        _eprint(f"forge-closed: no acoustic features for {skipped} clips "
                f"(pass --feature-bank to cover them)")
    _atomic_write(args.out, _manifest_text(pairs))
    _eprint(f"forge-closed: wrote {len(pairs)} pairs "
            f"from {len(metas)} clips to {args.out}")
    return 0


def _cmd_forge_open(args) -> int:
    from .forge import gen_open_ended_qa, read_meta_jsonl
    metas = read_meta_jsonl(args.meta)
    client = _make_llm_client(args)
    by_audio = {}
    for meta in metas:
        by_audio[meta.audio_id] = gen_open_ended_qa(meta, client)
        _eprint(f"forge-open: {meta.audio_id}: "
                f"{len(by_audio[meta.audio_id])} pairs")
    pairs = []
    for audio_id in sorted(by_audio):
        pairs.extend(by_audio[audio_id])
    _atomic_write(args.out, _manifest_text(pairs))
    _eprint(f"forge-open: wrote {len(pairs)} pairs to {args.out}")
    return 0


def _cmd_forge_features(args) -> int:
    from .forge import EchoFeatureClient, gen_feature_bank, read_meta_jsonl
    if args.classes:
        classes = [ln.strip() for ln in
                   Path(args.classes).read_text(encoding="utf-8").splitlines()
                   if ln.strip()]
    else:
        if not args.meta:
            raise UsageError("forge-features needs --classes or --meta")
        seen = {e.label for m in read_meta_jsonl(args.meta) for e in m.events}
        classes = sorted(seen)
    if not classes:
        raise ValueError("no classes to describe")
    client = EchoFeatureClient() if args.mock_llm else _make_llm_client(args)
    bank = gen_feature_bank(classes, client, cache_path=args.out)
    missing = [c for c in classes if c not in bank]
    if missing and len(missing) == len(classes):
        _eprint(f"forge-features: no class succeeded ({len(missing)} failed)")
        return 2
    if missing:
        _eprint(f"forge-features: partial bank, missing {missing}")
    _eprint(f"forge-features: {len(bank)} classes cached at {args.out}")
    return 0


def _cmd_sample_audioset(args) -> int:
    from .forge import sample_audioset
    with open(args.labels, encoding="utf-8") as fh:
        labels_of = json.load(fh)
    label_counts: dict[str, int] = {}
    for classes in labels_of.values():
        for c in classes:
            label_counts[c] = label_counts.get(c, 0) + 1
    chosen = sample_audioset(label_counts, labels_of, args.n)
    _emit("\n".join(chosen), args.out)
    _eprint(f"sample-audioset: kept {len(chosen)} of {len(labels_of)} audios")
    return 0


def _cmd_stats(args) -> int:
    from .forge import compute_dataset_stats, read_manifest, stats_to_dict
    stats = compute_dataset_stats(read_manifest(args.manifest))
    _emit(json.dumps(stats_to_dict(stats), indent=2, sort_keys=True),
          args.out)
    return 0


def _cmd_validate(args) -> int:
    from .forge import validate_manifest
    problems = validate_manifest(args.manifest)
    for line_no, problem in problems:
        print(f"line {line_no}: {problem}")
    _eprint(f"validate: {len(problems)} violations in {args.manifest}")
    return 1 if problems else 0


def _cmd_train(args) -> int:
    from .forge import read_manifest
    from .frontend import compute_fbank, patchify, read_wav
    from .model import AudioTextLm, DecoderConfig
    from .synthetic import corpus_items
    from .training import (TrainerConfig, default_curriculum, read_curriculum,
                           run_curriculum, scale_curriculum)
    pairs = read_manifest(args.manifest)
    audio_dir = Path(args.audio_dir)
    grids = {}
    for audio_id in sorted({p.audio_id for p in pairs}):
        wav = audio_dir / f"{audio_id}.wav"
        grids[audio_id] = patchify(compute_fbank(read_wav(wav)))
    items = corpus_items(pairs, grids)
    if args.curriculum:
        stages = read_curriculum(args.curriculum)
    else:
        stages = scale_curriculum(default_curriculum(), args.factor)
    _eprint(f"train: {len(items)} pairs, {len(grids)} clips, stage budgets "
            f"{[s.n_samples for s in stages]}")
    # desk-scale init: wider output head and LoRA-A so the frozen-base model
    # can actually move at toy scale
    model = AudioTextLm(DecoderConfig(), seed=args.seed,
                        out_scale=0.35, lora_a_scale=0.5)
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    report_path = args.report or str(out_root / "stage_reports.jsonl")
    cfg = TrainerConfig(batch_size=args.batch, seed=args.seed)
    reports = run_curriculum(model, items, stages, cfg,
                             report_path=report_path,
                             checkpoint_root=out_root)
    for r in reports:
        _eprint(f"train: stage {r.stage}: {r.steps} steps, "
                f"loss {r.initial_loss:.3f} -> {r.final_loss:.3f}"
                f"{' (aborted)' if r.aborted else ''}")
    if any(r.aborted for r in reports):
        _eprint("train: aborted on non-finite loss")
        return 2
    _eprint(f"train: checkpoints under {out_root}, reports at {report_path}")
    return 0


def _cmd_answer(args) -> int:
    from .frontend import compute_fbank, patchify, read_wav
    from .model import (BOS_ID, SEP_ID, GenerationConfig, decode_ids,
                        encode_text, generate, load_checkpoint)
    model = load_checkpoint(args.ckpt)
    grid = patchify(compute_fbank(read_wav(args.audio)))
    prompt = np.array([BOS_ID] + encode_text(args.question) + [SEP_ID],
                      dtype=np.int64)
    cfg = GenerationConfig(max_new_tokens=args.max_new_tokens, seed=args.seed)
    new_ids = generate(model, grid, prompt, cfg)
    output = decode_ids(new_ids)
    record = {"audio_id": Path(args.audio).stem,
              "question": args.question,
              "output": output}
    _emit(json.dumps(record, ensure_ascii=False), args.out)
    return 0


def _join_truths(preds: list[dict], truths: list[dict], field: str):
    by_id = {}
    for t in truths:
        if "audio_id" not in t or field not in t:
            raise ValueError(f"truth rows need audio_id and {field!r}")
        by_id[t["audio_id"]] = t[field]
    joined = []
    for p in preds:
        if "audio_id" not in p or "output" not in p:
            raise ValueError("prediction rows need audio_id and output")
        if p["audio_id"] not in by_id:
            raise ValueError(f"no truth for audio_id {p['audio_id']!r}")
        joined.append((p, by_id[p["audio_id"]]))
    if not joined:
        raise ValueError("nothing to evaluate")
    return joined


def _cmd_eval_classify(args) -> int:
    from .evaluate import (LabelSet, accuracy, classify_corpus,
                           mean_average_precision, micro_f1)
    names = [ln.strip() for ln in
             Path(args.labels).read_text(encoding="utf-8").splitlines()
             if ln.strip()]
    labels = LabelSet(tuple(names))
    joined = _join_truths(_read_jsonl(args.pred), _read_jsonl(args.truth),
                          "labels")
    provider = _make_provider(args)
    result = classify_corpus([p["output"] for p, _ in joined], labels,
                             provider)
    index = {n: i for i, n in enumerate(labels.names)}
    truth_sets = []
    for _, truth_labels in joined:
        if isinstance(truth_labels, str):
            truth_labels = [truth_labels]
        unknown = [t for t in truth_labels if t not in index]
        if unknown:
            raise ValueError(f"truth labels outside the label set: {unknown}")
        truth_sets.append({index[t] for t in truth_labels})
    truth_matrix = np.zeros((len(joined), len(labels.names)), dtype=int)
    for row, ts in zip(truth_matrix, truth_sets):
        row[list(ts)] = 1
    report = {
        "n": len(joined),
        "provider": provider.name,
        "accuracy": accuracy(result.predictions,
                             [min(ts) if len(ts) == 1 else -1
                              for ts in truth_sets])
        if all(len(ts) == 1 for ts in truth_sets) else None,
        "micro_f1": micro_f1([{p} for p in result.predictions], truth_sets),
        "map": mean_average_precision(result.scores, truth_matrix),
    }
    _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    return 0


def _cmd_eval_caption(args) -> int:
    from .evaluate import caption_overlap_f1
    joined = _join_truths(_read_jsonl(args.pred), _read_jsonl(args.truth),
                          "caption")
    scores = []
    for p, caption in joined:
        refs = caption if isinstance(caption, list) else [caption]
        scores.append(caption_overlap_f1(p["output"], refs))
    report = {"n": len(scores),
              "caption_f1_mean": float(np.mean(scores))}
    _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    return 0


def _cmd_eval_judge(args) -> int:
    from .evaluate import judge_rate
    preds = _read_jsonl(args.pred)
    pairs = []
    for p in preds:
        if "question" not in p or "output" not in p:
            raise ValueError("prediction rows need question and output")
        pairs.append((p["question"], p["output"]))
    client = _make_llm_client(args, mock_kind="judge")
    report = judge_rate(pairs, client)
    _emit(json.dumps({"rate": report.rate, "n_yes": report.n_yes,
                      "n_no": report.n_no,
                      "n_abstained": report.n_abstained},
                     indent=2, sort_keys=True), args.out)
    return 0


def _cmd_probe(args) -> int:
    from .evaluate import counting_probe, order_accuracy, order_probe
    preds = _read_jsonl(args.pred)
    if args.kind == "order":
        joined = _join_truths(preds, _read_jsonl(args.truth), "order")
        provider = _make_provider(args)
        results = []
        for p, order in joined:
            if not (isinstance(order, list) and len(order) == 2):
                raise ValueError("order truth must be [first, second]")
            results.append(order_probe(p["output"], order[0], order[1],
                                       provider))
        acc, n_followed, n_excluded = order_accuracy(results)
        report = {"order_accuracy": acc, "n_followed": n_followed,
                  "n_excluded": n_excluded}
    else:
        joined = _join_truths(preds, _read_jsonl(args.truth), "count")
        answers = [p["output"] for p, _ in joined]
        truths = [int(c) for _, c in joined]
        pr = counting_probe(answers, truths)
        report = {"pearson_r": pr.pearson_r,
                  "double_single_ratio": pr.double_single_ratio,
                  "n_used": pr.n_used,
                  "excluded": list(pr.excluded)}
    _emit(json.dumps(report, indent=2, sort_keys=True), args.out)
    return 0


# -- parser ----------------------------------------------------------------------

def _build_parser() -> _Parser:
    parser = _Parser(prog="aqakit",
                     description="Forge audio QA data, train the toy audio "
                                 "LM, and score outputs.")
    subs = parser.add_subparsers(dest="command", metavar="subcommand")

    def sub(name, func, **kwargs):
        p = subs.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--out", help="output path (default: stdout for "
                                     "reports; required for datasets)")
        p.add_argument("--seed", type=int, default=0)
        return p

    def llm_flags(p):
        p.add_argument("--mock-llm", action="store_true",
                       help="use the offline deterministic client")
        p.add_argument("--llm-url", default="")
        p.add_argument("--api-key-env", default="LLM_API_KEY")
        p.add_argument("--responses",
                       help="JSON prompt->reply map for --mock-llm replay")

    def provider_flags(p):
        p.add_argument("--provider", choices=("hashed", "remote"),
                       default="hashed")
        p.add_argument("--llm-url", default="")
        p.add_argument("--api-key-env", default="LLM_API_KEY")

    p = sub("forge-closed", _cmd_forge_closed,
            help="rule-based closed-ended QA from meta JSONL")
    p.add_argument("--meta", required=True)
    p.add_argument("--feature-bank")

    p = sub("forge-open", _cmd_forge_open,
            help="LLM-assisted open-ended QA from meta JSONL")
    p.add_argument("--meta", required=True)
    llm_flags(p)

    p = sub("forge-features", _cmd_forge_features,
            help="acoustic feature descriptions per class, cached")
    p.add_argument("--classes", help="file with one class name per line")
    p.add_argument("--meta", help="derive classes from this meta JSONL")
    llm_flags(p)

    p = sub("sample-audioset", _cmd_sample_audioset,
            help="inverse-frequency weighted audio selection")
    p.add_argument("--labels", required=True,
                   help="JSON map audio_id -> [class, ...]")
    p.add_argument("--n", type=int, required=True)

    p = sub("stats", _cmd_stats, help="dataset statistics as JSON")
    p.add_argument("--manifest", required=True)

    p = sub("validate", _cmd_validate, help="manifest schema check")
    p.add_argument("--manifest", required=True)

    p = sub("train", _cmd_train, help="run the scaled 4-stage curriculum")
    p.add_argument("--manifest", required=True)
    p.add_argument("--audio-dir", required=True)
    p.add_argument("--curriculum", help="stage file; default: scaled table")
    p.add_argument("--factor", type=float, default=1e-4)
    p.add_argument("--batch", type=int, default=8)
    p.add_argument("--report", help="stage report JSONL path")

    p = sub("answer", _cmd_answer, help="one-question batch inference")
    p.add_argument("--audio", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--ckpt", required=True)
    p.add_argument("--max-new-tokens", type=int, default=64)

    p = sub("eval-classify", _cmd_eval_classify,
            help="cosine classification metrics over predictions")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--labels", required=True,
                   help="file with one label name per line")
    provider_flags(p)

    p = sub("eval-caption", _cmd_eval_caption,
            help="token-overlap caption score")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)

    p = sub("eval-judge", _cmd_eval_judge,
            help="LLM-judged instruction-following rate")
    p.add_argument("--pred", required=True)
    llm_flags(p)

    p = sub("probe", _cmd_probe, help="ordering / counting probes")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--kind", choices=("order", "counting"), required=True)
    provider_flags(p)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_usage())
        # dataset-producing subcommands must not fall back to stdout
        if args.command in ("forge-closed", "forge-open", "forge-features",
                            "train") and not args.out:
            raise UsageError(f"{args.command} requires --out")
        return args.func(args)
    except UsageError as exc:
        _eprint(f"aqakit: {exc}")
        return 1
    except (ValueError, KeyError) as exc:
        _eprint(f"aqakit: invalid input: {exc}")
        return 1
    except (OSError, RuntimeError) as exc:
        _eprint(f"aqakit: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
