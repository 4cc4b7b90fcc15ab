"""Command-line pipeline: every stage reads and writes on-disk artifacts.

    communityrec synth      --out data/ --seed 7 ...
    communityrec ingest     --posts posts.jsonl --meta meta.jsonl --min-communities 3 --out data/
    communityrec split      --data data/ --seed 13 --out split.json
    communityrec featurize  --data data/ --mode tfidf-desc --out embeddings.jsonl
    communityrec similarity --data data/ --embeddings embeddings.jsonl --out similarity.csv
    communityrec train-mf   --data data/ --split split.json --k 16 --seed 17 --out model.json
    communityrec evaluate   --data data/ --split split.json --model hybrid --beta 0.4 ...
    communityrec sweep-beta --data data/ --split split.json ... --out curve.csv
    communityrec explain    --data data/ --split split.json --user U --community C ...

Exit codes: 0 on success, 1 on bad input or validation failure, 2 on
internal errors.  Every random stage takes an explicit --seed and the
artifacts record the seeds used.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import cbf, corpus, evaluation, explain, features, hybrid, mf, similarity, splits, synth

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; we reserve 2 for internal faults."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_dataset(data_dir: str) -> corpus.InteractionDataset:
    d = Path(data_dir)
    posts_path = d / "posts.jsonl"
    meta_path = d / "meta.jsonl"
    if not posts_path.is_file() or not meta_path.is_file():
        raise ValueError(f"dataset directory {d} must contain posts.jsonl and meta.jsonl")
    return corpus.ingest(posts_path, meta_path)


def _write_dataset_dir(ds: corpus.InteractionDataset, out_dir: str, manifest: dict) -> None:
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    corpus.write_dataset(ds, d / "posts.jsonl", d / "meta.jsonl")
    manifest = dict(manifest)
    manifest.update({"users": ds.m, "communities": ds.n, "posts": len(ds.posts)})
    with open(d / "dataset.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _dump_json(payload: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_synth(args) -> int:
    ds, topic_map = synth.generate(
        topics=args.topics,
        communities_per_topic=args.communities_per_topic,
        users=args.users,
        posts_per_user=args.posts_per_user,
        noise=args.noise,
        vocab_per_topic=args.vocab_per_topic,
        seed=args.seed,
    )
    _write_dataset_dir(
        ds,
        args.out,
        {
            "kind": "synthetic",
            "seed": args.seed,
            "topics": args.topics,
            "communities_per_topic": args.communities_per_topic,
            "posts_per_user": args.posts_per_user,
            "noise": args.noise,
            "vocab_per_topic": args.vocab_per_topic,
        },
    )
    _dump_json(topic_map, str(Path(args.out) / "topics.json"))
    print(f"wrote {len(ds.posts)} posts by {ds.m} users across {ds.n} communities to {args.out}")
    return 0


def _cmd_ingest(args) -> int:
    ds = corpus.ingest(args.posts, args.meta)
    if args.min_communities > 1:
        ds = corpus.filter_min_communities(ds, args.min_communities)
    _write_dataset_dir(ds, args.out, {"kind": "ingested", "min_communities": args.min_communities})
    print(f"ingested {len(ds.posts)} posts by {ds.m} users across {ds.n} communities into {args.out}")
    return 0


def _cmd_split(args) -> int:
    ds = _load_dataset(args.data)
    split = splits.build_split(ds, args.seed)
    if not split.test_examples:
        raise ValueError("no user has two or more communities; the split would have no test examples")
    negatives = splits.sample_negatives(ds, split, args.seed)
    split = dataclasses.replace(split, negatives=negatives)
    splits.save_split(split, ds, args.out)
    print(
        f"split: {len(split.test_examples)} test users, {len(negatives)} negatives, "
        f"{split.n_users_without_test} single-community users stay train-only -> {args.out}"
    )
    return 0


def _cmd_featurize(args) -> int:
    ds = _load_dataset(args.data)
    if args.mode == "tfidf-desc":
        model = features.fit_tfidf((cid, ds.descriptions[cid]) for cid in ds.communities)
        table = features.community_embeddings_from_descriptions(ds, model)
    elif args.mode == "tfidf-posts":
        if not args.split:
            raise ValueError("--mode tfidf-posts requires --split (the model is fitted on training posts)")
        split = splits.load_split(ds, args.split)
        model = features.fit_tfidf((features.post_id(p), p.text) for p in split.train_posts)
        post_table = features.post_embeddings_tfidf(model, split.train_posts)
        table = features.community_embeddings_from_posts(ds, post_table, posts=split.train_posts)
    else:  # import
        if not args.embeddings:
            raise ValueError("--mode import requires --embeddings")
        imported = features.import_embeddings(args.embeddings, info_tag=args.info)
        if args.info == "description":
            table = features.community_embeddings_from_descriptions(ds, imported)
        else:
            if not args.split:
                raise ValueError("--info posts requires --split (aggregation runs over training posts)")
            split = splits.load_split(ds, args.split)
            table = features.community_embeddings_from_posts(ds, imported, posts=split.train_posts)
    features.export_embeddings(table, args.out)
    print(f"wrote {len(table.vectors)} community vectors (dim {table.dim}, {table.source_tag}/{table.info_tag}) to {args.out}")
    return 0


def _cmd_similarity(args) -> int:
    ds = _load_dataset(args.data)
    table = features.import_embeddings(args.embeddings)
    sim = similarity.build_similarity(table, ds)
    similarity.save_similarity(sim, args.out)
    print(f"wrote {sim.n}x{sim.n} similarity matrix to {args.out}")
    return 0


def _train_matrix(ds, split):
    return corpus.build_rating_matrix(ds, split.negatives, posts=split.train_posts)


def _cmd_train_mf(args) -> int:
    ds = _load_dataset(args.data)
    split = splits.load_split(ds, args.split)
    if not split.negatives:
        raise ValueError(f"{args.split} has no sampled negatives; rerun the split stage")
    ratings = _train_matrix(ds, split)
    config = mf.MfConfig(
        k=args.k,
        lam=getattr(args, "lambda"),
        learning_rate=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        init_scale=args.init_scale,
    )
    model = mf.train(ratings, config)
    mf.save_model(model, args.out)
    final = mf.loss(model, ratings)
    print(f"trained mf (k={args.k}, epochs={args.epochs}, seed={args.seed}); objective {final:.4f} -> {args.out}")
    return 0


def _parse_ks(raw: str) -> list[int]:
    try:
        ks = [int(x) for x in raw.split(",") if x.strip()]
    except ValueError:
        raise ValueError(f"--ks must be a comma-separated list of integers, got {raw!r}") from None
    if not ks:
        raise ValueError("--ks must list at least one cutoff")
    return ks


def _scores_for(args, ds, split, model_name: str, beta: float | None):
    """Build the score matrix a subcommand asked for, loading only what it needs."""
    ratings = _train_matrix(ds, split)
    cbf_scores = mf_scores = None
    if model_name in ("cbf", "hybrid"):
        if not args.similarity:
            raise ValueError(f"--model {model_name} requires --similarity")
        sim = similarity.load_similarity(args.similarity)
        if sim.ids != ds.communities:
            raise ValueError("similarity matrix communities do not match the dataset")
        cbf_scores = cbf.predict_cbf(ratings, sim)
    if model_name in ("mf", "hybrid"):
        if not args.mf_model:
            raise ValueError(f"--model {model_name} requires --mf-model")
        model = mf.load_model(args.mf_model)
        if model.P.shape[0] != ds.m or model.Q.shape[0] != ds.n:
            raise ValueError("mf checkpoint shape does not match the dataset")
        mf_scores = mf.predict_mf(model)
    if model_name == "cbf":
        return cbf_scores
    if model_name == "mf":
        return mf_scores
    return hybrid.blend(cbf_scores, mf_scores, beta)


def _cmd_evaluate(args) -> int:
    ds = _load_dataset(args.data)
    split = splits.load_split(ds, args.split)
    ks = _parse_ks(args.ks)
    beta = args.beta
    if args.model == "hybrid" and beta is None:
        raise ValueError("--model hybrid requires --beta")
    if args.model == "random":
        report = evaluation.random_baseline(split, ds, ks, seed=args.seed, trials=args.trials)
        label = f"Random ({args.trials} trials)"
    else:
        scores = _scores_for(args, ds, split, args.model, beta)
        if args.model == "hybrid":
            label = f"MF+CBF (beta={beta:g})"
        else:
            label = args.model.upper()
        report = evaluation.evaluate(scores, split, ds, ks)
    print(evaluation.format_table([(label, report)], ks))
    if args.out:
        payload = {"model": args.model, "ks": ks, **evaluation.report_to_dict(report)}
        if args.model == "hybrid":
            payload["beta"] = beta
        if args.model == "random":
            payload["seed"] = args.seed
            payload["trials"] = args.trials
        _dump_json(payload, args.out)
    return 0


def _cmd_sweep_beta(args) -> int:
    ds = _load_dataset(args.data)
    split = splits.load_split(ds, args.split)
    ks = _parse_ks(args.ks)
    if not (0.0 < args.grid_step <= 1.0):
        raise ValueError(f"--grid-step must be in (0, 1], got {args.grid_step}")
    steps = round(1.0 / args.grid_step)
    if abs(steps * args.grid_step - 1.0) > 1e-9:
        raise ValueError(f"--grid-step must divide 1 evenly, got {args.grid_step}")
    grid = [min(1.0, i * args.grid_step) for i in range(steps + 1)]
    grid[-1] = 1.0

    ratings = _train_matrix(ds, split)
    if not args.similarity or not args.mf_model:
        raise ValueError("sweep-beta requires --similarity and --mf-model")
    sim = similarity.load_similarity(args.similarity)
    if sim.ids != ds.communities:
        raise ValueError("similarity matrix communities do not match the dataset")
    cbf_scores = cbf.predict_cbf(ratings, sim)
    model = mf.load_model(args.mf_model)
    if model.P.shape[0] != ds.m or model.Q.shape[0] != ds.n:
        raise ValueError("mf checkpoint shape does not match the dataset")
    mf_scores = mf.predict_mf(model)

    points, best = hybrid.sweep_beta(cbf_scores, mf_scores, split, ds, ks, grid)
    hybrid.save_curve(points, ks, args.out)
    print(evaluation.format_table([(f"beta={pt.beta:g}", pt.report) for pt in points], ks))
    print(f"best beta by MRR: {best.beta:g} (mrr={best.report.mrr:.4f}) -> {args.out}")
    return 0


def _cmd_explain(args) -> int:
    ds = _load_dataset(args.data)
    if args.item_bias:
        if args.user or args.community:
            raise ValueError("--item-bias cannot be combined with --user/--community")
        if not args.mf_model:
            raise ValueError("--item-bias requires --mf-model")
        model = mf.load_model(args.mf_model)
        report = explain.item_bias_report(model, ds)
        print(explain.format_item_bias(report))
        if args.out:
            payload = {
                "pearson": report.pearson,
                "rows": [
                    {"community_id": r.community_id, "post_count": r.post_count, "item_bias": r.item_bias}
                    for r in report.rows
                ],
            }
            _dump_json(payload, args.out)
        return 0

    if not args.user or not args.community:
        raise ValueError("explain needs either --item-bias or both --user and --community")
    if not args.split or not args.similarity:
        raise ValueError("a cbf explanation requires --split and --similarity")
    split = splits.load_split(ds, args.split)
    sim = similarity.load_similarity(args.similarity)
    if sim.ids != ds.communities:
        raise ValueError("similarity matrix communities do not match the dataset")
    if args.user not in ds.user_pos:
        raise ValueError(f"unknown user id {args.user!r}")
    if args.community not in ds.community_pos:
        raise ValueError(f"unknown community id {args.community!r}")
    ratings = _train_matrix(ds, split)
    exp = explain.explain_cbf(
        ratings, sim, ds.user_pos[args.user], ds.community_pos[args.community], top=args.top
    )
    print(explain.format_explanation(exp))
    if args.out:
        _dump_json(explain.explanation_to_dict(exp), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="communityrec", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a planted-topic synthetic dataset")
    p.add_argument("--topics", type=int, default=4)
    p.add_argument("--communities-per-topic", type=int, default=3)
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--posts-per-user", type=int, default=5)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--vocab-per-topic", type=int, default=20)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="validate and store a posts/meta corpus")
    p.add_argument("--posts", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--min-communities", type=int, default=1, help="drop users below this many distinct communities")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("split", help="leave-latest-out split plus negative sampling")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("featurize", help="produce per-community embedding vectors")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["tfidf-desc", "tfidf-posts", "import"], required=True)
    p.add_argument("--split", help="split.json (required for post-level modes)")
    p.add_argument("--embeddings", help="external embeddings.jsonl for --mode import")
    p.add_argument("--info", choices=["description", "posts"], default="description",
                   help="what imported vectors describe")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("similarity", help="community-community cosine similarity matrix")
    p.add_argument("--data", required=True)
    p.add_argument("--embeddings", required=True, help="community-level embeddings.jsonl")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("train-mf", help="train the biased nonnegative factorization")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--lambda", type=float, default=0.05)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--init-scale", type=float, default=0.1)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_train_mf)

    p = sub.add_parser("evaluate", help="MRR / Recall@K on the held-out communities")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--model", choices=["cbf", "mf", "hybrid", "random"], required=True)
    p.add_argument("--similarity")
    p.add_argument("--mf-model")
    p.add_argument("--beta", type=float)
    p.add_argument("--ks", default="1,3,5,10")
    p.add_argument("--seed", type=int, default=0, help="random-baseline seed")
    p.add_argument("--trials", type=int, default=100, help="random-baseline trials")
    p.add_argument("--out", help="write metrics JSON here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep-beta", help="metric curve over the blend weight")
    p.add_argument("--data", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--similarity", required=True)
    p.add_argument("--mf-model", required=True)
    p.add_argument("--grid-step", type=float, default=0.05)
    p.add_argument("--ks", default="1,3,5,10")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep_beta)

    p = sub.add_parser("explain", help="contribution breakdowns and bias diagnostics")
    p.add_argument("--data", required=True)
    p.add_argument("--split")
    p.add_argument("--similarity")
    p.add_argument("--mf-model")
    p.add_argument("--user", help="user id for a cbf breakdown")
    p.add_argument("--community", help="community id for a cbf breakdown")
    p.add_argument("--top", type=int, help="keep only the heaviest rows")
    p.add_argument("--item-bias", action="store_true", help="post-count vs item-bias table instead")
    p.add_argument("--out", help="write JSON here")
    p.set_defaults(func=_cmd_explain)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # pragma: no cover - internal faults
        logger.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())
