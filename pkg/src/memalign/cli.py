"""Command-line surface tying all pipeline stages together.

Exit codes: 0 success, 1 validation error (bad flags, bad data, rejected
verification), 2 I/O error.  All stochastic behavior derives from the
global seed; JSON reports omit wall-clock timings so identical runs
produce byte-identical artifacts.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .config import EngineConfig, default_config_text, load_config
from .corpus import (
    corpus_vocabulary,
    coverage_mask,
    generate_synthetic_corpus,
    instance_content,
    load_corpus,
    save_corpus,
)
from .decoding import generate_subgraph
from .fusion import retrieve_fused
from .graphs import emit_evidence, parse_evidence, parse_full_graph, verify_subset
from .pipeline import (
    ANCHOR_PARADIGM,
    Runtime,
    anchor_vector,
    build_runtime,
    evaluate_retrieval,
    module_from_sections,
    module_sections,
    retriever_from_sections,
    retriever_sections,
    train_alignment_pipeline,
    train_retriever_pipeline,
)
from .unified import align_forward
from .vocab import Vocabulary

REPORT_KEYS = ("em", "f1", "rouge1", "mem_length", "unique_ratio", "utilization", "n")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on bad flags, not argparse's 2
        raise UsageError(f"{message}\n{self.format_usage()}")


def _parse_coverage(raw: str) -> tuple[float, ...]:
    try:
        levels = tuple(float(part) for part in raw.split(",") if part.strip())
    except ValueError as exc:
        raise UsageError(f"bad coverage list {raw!r}") from exc
    for level in levels:
        if not 0.0 <= level <= 1.0:
            raise UsageError(f"coverage level {level} outside [0, 1]")
    return levels


def build_parser() -> _Parser:
    parser = _Parser(prog="memalign", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="engine config file")
    common.add_argument("--seed", type=int, help="global seed override")
    common.add_argument(
        "--out", type=Path, default=Path("."), help="output directory"
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-data", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--n", type=int, default=2500)
    p.add_argument("--segment-count", type=int, default=8)
    p.add_argument("--answer-position", choices=("last", "alternate"), default="last")
    p.add_argument("--name", default="corpus.jsonl")

    p = sub.add_parser(
        "train-retriever", parents=[common], help="stage 1: distill the retriever"
    )
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--coverage", type=_parse_coverage, default=())

    p = sub.add_parser(
        "train-align", parents=[common], help="stage 2: align one paradigm"
    )
    p.add_argument("--paradigm", required=True)
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--coverage", type=_parse_coverage, default=())

    p = sub.add_parser(
        "retrieve", parents=[common], help="single-paradigm evidence retrieval"
    )
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--checkpoints", type=Path, help="defaults to --out")
    p.add_argument("--paradigm", default=ANCHOR_PARADIGM)
    p.add_argument("--side", type=int, choices=(0, 1))
    p.add_argument("--coverage-level", type=float, default=1.0)

    p = sub.add_parser(
        "fuse-retrieve", parents=[common], help="max-pool fused retrieval"
    )
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--checkpoints", type=Path)
    p.add_argument(
        "--paradigm",
        action="append",
        help="repeat once per paradigm (default: explicit-sim latent-sim)",
    )
    p.add_argument("--coverage-level", type=float, default=1.0)

    p = sub.add_parser("eval", parents=[common], help="metrics report over a corpus")
    p.add_argument("--corpus", type=Path, required=True)
    p.add_argument("--checkpoints", type=Path)

    p = sub.add_parser(
        "verify", parents=[common], help="subset-check a subgraph against a graph"
    )
    p.add_argument("--full", type=Path, required=True)
    p.add_argument("--sub", type=Path, required=True)

    p = sub.add_parser(
        "default-config", parents=[common], help="print the default config file"
    )
    return parser


def _engine_config(args) -> EngineConfig:
    cfg = load_config(args.config) if args.config else EngineConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise UsageError("--seed must be a non-negative integer")
        cfg.seed = args.seed
        cfg.align.seed = args.seed
        cfg.distill.seed = args.seed
        if not args.config:
            cfg.paradigms = EngineConfig(seed=args.seed).paradigms
    return cfg


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _load_retriever(checkpoint_dir: Path):
    model = retriever_from_sections(load_checkpoint(checkpoint_dir / "retriever.ckpt"))
    vocab = Vocabulary.load(checkpoint_dir / "vocab.jsonl")
    return model, vocab


def _load_module(runtime: Runtime, checkpoint_dir: Path, paradigm: str):
    if paradigm == ANCHOR_PARADIGM:
        return runtime.anchor_module
    sections = load_checkpoint(checkpoint_dir / f"align_{paradigm}.ckpt")
    return module_from_sections(sections, "align")


def _write_retrieved(path: Path, rows: list[dict]) -> None:
    path.write_text(
        "".join(json.dumps(row, sort_keys=True) + "\n" for row in rows),
        encoding="utf-8",
    )


# -- subcommands ---------------------------------------------------------


def _cmd_gen_data(args) -> int:
    cfg = _engine_config(args)
    instances = generate_synthetic_corpus(
        args.n,
        cfg.seed,
        segment_count=args.segment_count,
        d_c=cfg.d_c,
        answer_position=args.answer_position,
    )
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / args.name
    save_corpus(instances, path)
    print(f"wrote {len(instances)} instances to {path}")
    return 0


def _cmd_train_retriever(args) -> int:
    cfg = _engine_config(args)
    runtime = build_runtime(cfg)
    instances = load_corpus(args.corpus, d_c=cfg.d_c)
    model, vocab, report = train_retriever_pipeline(
        runtime, instances, coverage_levels=args.coverage
    )
    args.out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(retriever_sections(model), args.out / "retriever.ckpt")
    vocab.save(args.out / "vocab.jsonl")
    _write_json(
        args.out / "retriever_report.json",
        {
            "epoch_losses": report.epoch_losses,
            "parameter_count": report.parameter_count,
            "n_examples": len(instances),
        },
    )
    print(f"trained retriever ({report.parameter_count} parameters); "
          f"final loss {report.epoch_losses[-1]:.6f}")
    return 0


def _cmd_train_align(args) -> int:
    cfg = _engine_config(args)
    runtime = build_runtime(cfg)
    if args.paradigm == ANCHOR_PARADIGM:
        raise UsageError("the anchored paradigm is frozen and never trained")
    instances = load_corpus(args.corpus, d_c=cfg.d_c)
    n_demos = len(instances) * (1 + 2 * len(args.coverage))
    align_config = dataclasses.replace(
        cfg.align,
        n_demos=n_demos,
        holdout=min(cfg.align.holdout, max(n_demos - cfg.align.batch_size, 0)),
    )
    module, report = train_alignment_pipeline(
        runtime, args.paradigm, instances, align_config, args.coverage
    )
    args.out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(
        module_sections(module, "align"), args.out / f"align_{args.paradigm}.ckpt"
    )
    _write_json(
        args.out / f"align_{args.paradigm}_report.json",
        {
            "epoch_losses": report.epoch_losses,
            "holdout_accuracy": report.holdout_accuracy,
            "holdout_size": report.holdout_size,
            "cosine_gap": report.cosine_gap,
            "anchor_digest_before": report.anchor_digest_before,
            "anchor_digest_after": report.anchor_digest_after,
        },
    )
    print(
        f"aligned {args.paradigm}: holdout accuracy "
        f"{report.holdout_accuracy:.3f}, cosine gap {report.cosine_gap:.3f}"
    )
    return 0


def _conditioning(runtime: Runtime, instance, paradigm: str, module, mask):
    if paradigm == ANCHOR_PARADIGM:
        return anchor_vector(runtime, instance, mask)
    state = runtime.registry.encode_state(paradigm, instance_content(instance), mask)
    return align_forward(module, state)


def _cmd_retrieve(args) -> int:
    cfg = _engine_config(args)
    runtime = build_runtime(cfg)
    ckpt_dir = args.checkpoints or args.out
    model, vocab = _load_retriever(ckpt_dir)
    module = _load_module(runtime, ckpt_dir, args.paradigm)
    instances = load_corpus(args.corpus, d_c=cfg.d_c)
    rows = []
    for instance in instances:
        mask = (
            None
            if args.side is None
            else coverage_mask(args.side, args.coverage_level, instance.segment_count)
        )
        h = _conditioning(runtime, instance, args.paradigm, module, mask)
        sub = generate_subgraph(
            model,
            instance.full_graph(),
            runtime.embedder.embed(instance.query),
            h,
            vocab,
        )
        rows.append({"id": instance.id, "evidence": emit_evidence(sub)})
    args.out.mkdir(parents=True, exist_ok=True)
    _write_retrieved(args.out / "retrieved.jsonl", rows)
    print(f"retrieved evidence for {len(rows)} instances")
    return 0


def _cmd_fuse_retrieve(args) -> int:
    cfg = _engine_config(args)
    runtime = build_runtime(cfg)
    ckpt_dir = args.checkpoints or args.out
    model, vocab = _load_retriever(ckpt_dir)
    paradigms = tuple(args.paradigm or ("explicit-sim", "latent-sim"))
    if len(paradigms) < 2:
        raise UsageError("fuse-retrieve needs at least two --paradigm flags")
    modules = {p: _load_module(runtime, ckpt_dir, p) for p in paradigms}
    instances = load_corpus(args.corpus, d_c=cfg.d_c)
    rows = []
    for instance in instances:
        content = instance_content(instance, paradigms[:2])
        states = [
            runtime.registry.encode_state(
                paradigm,
                content,
                coverage_mask(
                    side % 2, args.coverage_level, instance.segment_count
                ),
            )
            for side, paradigm in enumerate(paradigms)
        ]
        sub = retrieve_fused(
            states,
            modules,
            model,
            instance.full_graph(),
            runtime.embedder.embed(instance.query),
            vocab,
        )
        rows.append({"id": instance.id, "evidence": emit_evidence(sub)})
    args.out.mkdir(parents=True, exist_ok=True)
    _write_retrieved(args.out / "fused_retrieved.jsonl", rows)
    print(f"fused retrieval over {paradigms} for {len(rows)} instances")
    return 0


def _cmd_eval(args) -> int:
    cfg = _engine_config(args)
    runtime = build_runtime(cfg)
    ckpt_dir = args.checkpoints or args.out
    model, vocab = _load_retriever(ckpt_dir)
    instances = load_corpus(args.corpus, d_c=cfg.d_c)
    full = evaluate_retrieval(runtime, model, vocab, instances)
    report = {key: full[key] for key in REPORT_KEYS}
    args.out.mkdir(parents=True, exist_ok=True)
    _write_json(args.out / "eval_report.json", report)
    print(json.dumps(report, indent=2, sort_keys=True))
    print(f"Unique Ratio: {100.0 * report['unique_ratio']:.1f}%")
    return 0


def _cmd_verify(args) -> int:
    full = parse_full_graph(args.full.read_text(encoding="utf-8"))
    sub = parse_evidence(args.sub.read_text(encoding="utf-8"))
    report = verify_subset(sub, full)
    if report.accepted:
        print("ACCEPTED")
        return 0
    print("REJECTED")
    for violation in report.violations:
        print(f"  {violation.kind}: {violation.element}")
    return 1


def _cmd_default_config(args) -> int:
    print(default_config_text(), end="")
    return 0


_COMMANDS = {
    "gen-data": _cmd_gen_data,
    "train-retriever": _cmd_train_retriever,
    "train-align": _cmd_train_align,
    "retrieve": _cmd_retrieve,
    "fuse-retrieve": _cmd_fuse_retrieve,
    "eval": _cmd_eval,
    "verify": _cmd_verify,
    "default-config": _cmd_default_config,
}


def run(argv: list[str]) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError(parser.format_usage())
    return _COMMANDS[args.command](args)


def main(argv: list[str] | None = None) -> int:
    try:
        return run(sys.argv[1:] if argv is None else argv)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
