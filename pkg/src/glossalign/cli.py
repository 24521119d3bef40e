"""Command-line entry point.

Exit status: 0 on success, 1 on malformed input data, 2 on usage or
configuration errors. Outputs are written atomically, so a failed command
leaves no partial files behind.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import dataio, gloss, losses, oracles, pipeline, synthetic
from .dtw import ORACLE_MAX_LEN, dtw_align, oracle_align, path_to_alignment_vector
from .seqcore import AlignmentError, CostFn


class ConfigError(Exception):
    pass


def _vector(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_align(args) -> int:
    records = dataio.read_pairs(args.input)
    fn = CostFn.parse(args.cost)
    lines = []
    for rec in records:
        res = dtw_align(rec.summary, rec.source, fn)
        q, t = rec.summary.length, rec.source.length
        lines.append(dataio.dumps_line({
            "id": rec.id,
            "cost": res.cost,
            "norm_cost": res.cost / (q + t),
            "path": [list(step) for step in res.path.steps],
            "vector": path_to_alignment_vector(res.path).tolist(),
        }))
    dataio.write_atomic(args.out, "".join(line + "\n" for line in lines))
    return 0


def cmd_filter(args) -> int:
    records = dataio.read_pairs(args.input)
    targets = pipeline.precompute_targets(records, CostFn.parse(args.cost))
    kept = pipeline.filter_dataset(records, targets, args.threshold)
    kept_ids = {r.id for r in kept}
    report = {
        "threshold": args.threshold,
        "total": len(records),
        "kept": len(kept),
        "dropped": [{"id": r.id, "norm_cost": targets[r.id].norm_cost}
                    for r in records if r.id not in kept_ids],
    }
    dataio.write_pairs(args.out, kept)
    if args.report:
        dataio.write_json(args.report, report)
    print(json.dumps(report))
    return 0


def _gloss_pairs(records):
    pairs = []
    for rec in records:
        if rec.gloss is None:
            raise dataio.DatasetError(f"pair {rec.id!r} has no gloss labels")
        pairs.append((rec.source.token_ids(), list(rec.gloss)))
    return pairs


def cmd_train_gloss(args) -> int:
    if args.epochs < 1 or args.lr < 0:
        raise ConfigError("--epochs must be >= 1 and --lr >= 0")
    pairs = _gloss_pairs(dataio.read_pairs(args.input))
    needed = max(max(s + t, default=0) for s, t in pairs) + 1
    size = args.vocab_size or max(needed, 4)
    if size < needed:
        raise ConfigError(f"--vocab-size {size} is smaller than the largest id + 1 ({needed})")
    longest = max(len(s) for s, _ in pairs)
    model = gloss.GlossModel.init(size, args.embed_dim, args.hidden_dim,
                                  max_positions=max(32, longest), seed=args.seed)
    model, history = gloss.train(model, pairs, args.epochs, args.lr, args.seed,
                                 momentum=args.momentum, batch_size=args.batch_size)
    dataio.write_json(args.out, model.to_dict())
    report = {
        "config": {"epochs": args.epochs, "lr": args.lr, "seed": args.seed, "momentum": args.momentum,
                   "batch_size": args.batch_size, "vocab_size": size,
                   "embed_dim": args.embed_dim, "hidden_dim": args.hidden_dim},
        "epochs": [m.to_dict() for m in history],
        "final": history[-1].to_dict(),
    }
    if args.report:
        dataio.write_json(args.report, report)
    print(json.dumps(report["final"]))
    return 0


def _loss_config(args) -> losses.LossConfig:
    try:
        return losses.LossConfig(lambda_ce=args.lambda_ce, lambda_sp=args.lambda_sp)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def cmd_train_filter(args) -> int:
    try:
        config = pipeline.RunConfig(mode=args.mode, loss=_loss_config(args), epochs=args.epochs,
                                    lr=args.lr, seed=args.seed, filter_threshold=args.threshold)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not args.lr > 0:
        raise ConfigError("--lr must be > 0")
    records = dataio.read_pairs(args.input)
    if not records:
        raise dataio.DatasetError(f"{args.input}: no pairs")
    targets = pipeline.precompute_targets(records)
    scorer, reports = pipeline.train_result_filter(records, targets, config)
    dataio.write_json(args.out, scorer.to_dict())
    report = {
        "config": config.to_dict(),
        "epochs": [r.to_dict(args.timing) for r in reports],
        "final": reports[-1].to_dict(args.timing),
    }
    if args.report:
        dataio.write_json(args.report, report)
    print(json.dumps(report["final"]))
    return 0


def cmd_efficiency(args) -> int:
    if args.budget < 1 or not args.lr > 0:
        raise ConfigError("--budget must be >= 1 and --lr > 0")
    loss = _loss_config(args)
    records = dataio.read_pairs(args.input)
    if not records:
        raise dataio.DatasetError(f"{args.input}: no pairs")
    eval_set = dataio.read_pairs(args.eval) if args.eval else None
    results = pipeline.run_efficiency_experiment(records, args.budget, args.seed, lr=args.lr, loss=loss,
                                                 threshold=args.threshold, eval_set=eval_set)
    report = {
        "config": {"budget": args.budget, "seed": args.seed, "lr": args.lr, "threshold": args.threshold,
                   "loss": loss.to_dict(), "modes": list(pipeline.MODES),
                   "eval": "file" if args.eval else "filtered-input"},
        "epochs": {mode: [r.to_dict(args.timing) for r in reps] for mode, reps in results.items()},
        "final": {mode: reps[-1].to_dict(args.timing) for mode, reps in results.items()},
    }
    dataio.write_json(args.out, report)
    print(json.dumps({m: f["accuracy"] for m, f in report["final"].items()}))
    return 0


def cmd_oracle_check(args) -> int:
    if not 1 <= args.max_len <= 7:
        raise ConfigError("--max-len must lie in 1..7")
    ok = True
    for suite in oracles.run_all(max_len=args.max_len, n_random=args.random, seed=args.seed):
        print(suite.summary())
        ok &= suite.ok
    if args.input:
        suite = oracles.SuiteResult(f"dtw fixtures ({args.input})")
        for rec in dataio.read_pairs(args.input):
            if rec.summary.length > ORACLE_MAX_LEN or rec.source.length > ORACLE_MAX_LEN:
                continue
            fn = CostFn.ABS_DIFF if rec.source.dim == 1 else CostFn.EUCLIDEAN
            got = dtw_align(rec.summary, rec.source, fn).cost
            want = oracle_align(rec.summary, rec.source, fn).cost
            suite.checked += 1
            if got != want:
                suite.failures.append(rec.id)
        print(suite.summary())
        ok &= suite.ok
    return 0 if ok else 1


def cmd_loss(args) -> int:
    truth, pred = args.truth, args.pred
    if args.kind == "ce":
        value = losses.cross_entropy_alignment(pred, truth)
    elif args.kind == "sp":
        if args.normalize:
            truth = losses.normalize_alignment(truth).values
            pred = losses.normalize_alignment(pred).values
        value = losses.sp_loss(truth, pred)
    else:
        value = losses.l2_loss(truth, pred)
    print(f"{value:.6f}")
    return 0


def cmd_synth(args) -> int:
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    if args.kind == "corrupted":
        pairs = synthetic.corrupted_pairs(args.n, corrupt_fraction=args.corrupt_fraction, seed=args.seed)
        records = pipeline.benchmark_records(pairs)
    else:
        make = synthetic.copy_task if args.kind == "copy" else synthetic.summarize_task
        records = [pipeline.PairRecord.of(f"{args.kind}-{i:04d}", [[s] for s in src], [[g] for g in tgt], tgt)
                   for i, (src, tgt) in enumerate(make(args.n, seed=args.seed))]
    dataio.write_pairs(args.out, records)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="glossalign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="DTW-align every pair (summary rows vs source columns)")
    p.add_argument("--input", required=True)
    p.add_argument("--cost", choices=["abs", "euclidean", "token"], default="euclidean")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("filter", help="drop pairs whose normalized DTW cost exceeds a threshold")
    p.add_argument("--input", required=True)
    p.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
    p.add_argument("--cost", choices=["abs", "euclidean", "token"], default="euclidean")
    p.add_argument("--out", required=True)
    p.add_argument("--report", help="also write the drop report to this JSON file")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("train-gloss", help="train the gloss encoder-decoder on pairs with gloss labels")
    p.add_argument("--input", required=True)
    p.add_argument("--epochs", type=int, required=True)
    p.add_argument("--lr", type=float, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="model checkpoint (JSON)")
    p.add_argument("--report")
    p.add_argument("--vocab-size", type=int, default=0)
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--hidden-dim", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--momentum", type=float, default=0.9)
    p.set_defaults(func=cmd_train_gloss)

    def loss_flags(p):
        p.add_argument("--lambda-ce", type=float, default=1.0)
        p.add_argument("--lambda-sp", type=float, default=1.0)
        p.add_argument("--threshold", type=float, default=pipeline.DEFAULT_THRESHOLD)
        p.add_argument("--timing", action="store_true", help="include wall-clock seconds (breaks byte-reproducibility)")

    p = sub.add_parser("train-filter", help="train the pair scorer in one mode")
    p.add_argument("--mode", choices=pipeline.MODES, required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--epochs", type=int, default=40)
    p.add_argument("--lr", type=float, default=0.5)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="scorer checkpoint (JSON)")
    p.add_argument("--report", help="per-epoch report (JSON)")
    loss_flags(p)
    p.set_defaults(func=cmd_train_filter)

    p = sub.add_parser("efficiency", help="compare base / ds / rf / dsrf under one epoch budget")
    p.add_argument("--input", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--eval", help="clean evaluation pairs (default: input pairs passing the filter)")
    p.add_argument("--lr", type=float, default=0.5)
    loss_flags(p)
    p.set_defaults(func=cmd_efficiency)

    p = sub.add_parser("oracle-check", help="run the DTW and decoder oracle equivalence suites")
    p.add_argument("--max-len", type=int, default=5)
    p.add_argument("--random", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--input", help="also check every small pair of this dataset")
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("loss", help="evaluate one alignment loss")
    p.add_argument("--truth", type=_vector, required=True)
    p.add_argument("--pred", type=_vector, required=True)
    p.add_argument("--kind", choices=["ce", "sp", "l2"], required=True)
    p.add_argument("--normalize", action="store_true", help="min-max normalize both vectors first (sp only)")
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("synth", help="write a seeded synthetic dataset")
    p.add_argument("--kind", choices=["corrupted", "copy", "summarize"], required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--corrupt-fraction", type=float, default=0.1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        print(f"glossalign: error: {exc}", file=sys.stderr)
        return 2
    except (AlignmentError, OSError, ValueError) as exc:
        print(f"glossalign: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
