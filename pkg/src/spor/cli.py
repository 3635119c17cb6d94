"""Command-line pipeline: ingest -> build -> generate -> eval -> report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Mapping, Sequence

from . import alignment, generation, ingest, order_invariance, reporting, rules
from .distribution import DEFAULT_DIVERGENCE_THRESHOLD
from .errors import SporError
from .linearize import linearize
from .metrics import (DEFAULT_BOOTSTRAP_RESAMPLES, ScoreVector,
                      average_over_seeds, paired_significance)
from .model import (Aspect, Corpus, Dialect, Sample, SplitArtifact,
                    read_corpus, read_corpus_meta, read_samples, write_artifact,
                    write_corpus, write_samples)
from .parent import DEFAULT_PARENT_PARAMS, parent_score
from .productivity import (DEFAULT_SIZE_THRESHOLDS, build_productivity,
                           verify_productivity)
from .systematicity import DEFAULT_RESTARTS, best_of_restarts, verify_systematicity

log = logging.getLogger("spor")


def _infer_dialect(samples: Sequence[Sample]) -> Dialect:
    from .model import UnitKind
    if samples and samples[0].units[0].kind is UnitKind.TRIPLE:
        return Dialect.TRIPLE
    return Dialect.KV


def _read_lexicon_arg(path: str | None):
    return ingest.load_lexicon(path) if path else None


# --------------------------------------------------------------------------
# scoring helpers


def _score_store(samples: Sequence[Sample], store: Mapping[tuple[str, str], str],
                 metric: str, variant: str = "orig",
                 lexicon=None, seed_id: str | None = None) -> ScoreVector:
    dialect = _infer_dialect(samples)
    scores = []
    for sample in samples:
        key = (sample.id, variant)
        if key not in store:
            from .errors import MissingPrediction
            raise MissingPrediction(sample.id, variant)
        text = store[key]
        if metric == "parent":
            scores.append(parent_score(text, sample.references, sample.units))
        else:
            present, _ = alignment.extract_output_units(sample, text, dialect, lexicon)
            scores.append(len(present) / len(sample.units))
    return ScoreVector(scores=tuple(scores), sample_ids=tuple(s.id for s in samples),
                       seed_id=seed_id)


def _paired_eval(test_samples: Sequence[Sample], side_a_paths: Sequence[str],
                 side_b_paths: Sequence[str], label_a: str, label_b: str,
                 metric: str, resamples: int, boot_seed: int, lexicon=None) -> dict:
    def side(paths: Sequence[str]) -> tuple[ScoreVector, float, list[float]]:
        vectors = [_score_store(test_samples, generation.load_store(p), metric,
                                seed_id=Path(p).name) for p in paths]
        averaged, mean = average_over_seeds(vectors)
        return averaged, mean, [v.mean for v in vectors]

    vec_a, mean_a, per_seed_a = side(side_a_paths)
    vec_b, mean_b, per_seed_b = side(side_b_paths)
    p_value = paired_significance(vec_a, vec_b, resamples=resamples, seed=boot_seed)
    return {
        "metric": metric,
        "parent_params": {"max_order": DEFAULT_PARENT_PARAMS.max_order,
                          "lambda_weight": DEFAULT_PARENT_PARAMS.lambda_weight},
        label_a: {"mean": mean_a, "per_seed": per_seed_a},
        label_b: {"mean": mean_b, "per_seed": per_seed_b},
        "n_samples": len(test_samples),
        "p_value": p_value,
        "significance": reporting.significance_marker(p_value),
        "bootstrap": {"resamples": resamples, "seed": boot_seed},
    }


# --------------------------------------------------------------------------
# commands


def cmd_ingest(args) -> int:
    lexicon = _read_lexicon_arg(args.lexicon)
    options = ingest.IngestOptions(lexicon=lexicon)
    corpus = ingest.load_corpus(Dialect(args.dialect), args.train, args.test, options)
    out = Path(args.out)
    extra = {"lexicon": lexicon} if lexicon else None
    write_corpus(out, corpus, extra_meta=extra)
    stats = ingest.corpus_stats(corpus)
    (out / "stats.json").write_text(
        json.dumps(stats.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8")
    log.info("ingested %d train / %d test samples into %s",
             stats.n_train, stats.n_test, out)
    return 0


def _test_prompts(samples: Sequence[Sample], dialect: Dialect) -> list[generation.PromptTask]:
    return [generation.PromptTask(s.id, "orig", linearize(s, dialect)) for s in samples]


def cmd_build_systematicity(args) -> int:
    corpus = read_corpus(args.corpus)
    split = best_of_restarts(corpus, restarts=args.restarts, seed=args.seed, r=args.r)
    report = verify_systematicity(split, r=args.r)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for artifact in (split.atom, split.combination, split.test):
        write_artifact(out, artifact)
    write_samples(out / "blocked.jsonl", split.blocked)
    (out / "verification.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    generation.write_prompts(out / "prompts_test.jsonl",
                             _test_prompts(split.test.samples, corpus.dialect))
    log.info("systematicity: %d test, %d atom, %d combination samples",
             len(split.test.samples), len(split.atom.samples),
             len(split.combination.samples))
    return 0


def cmd_build_productivity(args) -> int:
    corpus = read_corpus(args.corpus)
    domains = frozenset(args.domains.split(",")) if args.domains else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for n in (int(x) for x in args.sizes.split(",")):
        split = build_productivity(corpus, n, r=args.r, seed=args.seed,
                                   domain_filter=domains)
        report = verify_productivity(split, r=args.r)
        for artifact in (split.invisible, split.visible, split.test):
            write_artifact(out, artifact)
        (out / f"verification_n{n}.json").write_text(
            json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        generation.write_prompts(out / f"prompts_test_n{n}.jsonl",
                                 _test_prompts(split.test.samples, corpus.dialect))
        log.info("productivity N=%d: %d invisible, %d visible, %d test",
                 n, report["n_invisible"], report["n_visible"], report["n_test"])
    return 0


def cmd_build_order(args) -> int:
    corpus = read_corpus(args.corpus)
    meta = read_corpus_meta(args.corpus)
    lexicon = meta.get("lexicon") or _read_lexicon_arg(args.lexicon)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    if args.variant == "match":
        train = order_invariance.build_match_training(corpus, lexicon)
    else:
        train = SplitArtifact(Aspect.ORDER_INVARIANCE, "original", corpus.train,
                              {"n_samples": len(corpus.train)})
    write_artifact(out, train)

    filtered = order_invariance.filter_order_test(corpus, lexicon)
    pairs = order_invariance.generate_permutation_pairs(filtered, seed=args.seed)
    by_id = {s.id: s for s in filtered}
    order_invariance.write_pairs(out / "pairs.jsonl", pairs, by_id, corpus.dialect)
    write_samples(out / "test.jsonl", corpus.test)

    tasks = []
    for pair in pairs:
        sample = by_id[pair.sample_id]
        tasks.append(generation.PromptTask(
            sample.id, "a", linearize(sample, corpus.dialect, pair.order_a)))
        tasks.append(generation.PromptTask(
            sample.id, "b", linearize(sample, corpus.dialect, pair.order_b)))
    tasks.extend(_test_prompts(corpus.test, corpus.dialect))
    generation.write_prompts(out / "prompts.jsonl", tasks)
    log.info("order (%s): %d training samples, %d pairs", args.variant,
             len(train.samples), len(pairs))
    return 0


def cmd_build_rules(args) -> int:
    corpus = read_corpus(args.corpus)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dialect = Dialect(args.dialect) if args.dialect else corpus.dialect
    if dialect is Dialect.TRIPLE:
        hidden = rules.build_hidden_triple_set(corpus.test)
    else:
        inventory = rules.value_inventory(corpus)
        config = rules.HiddenKvConfig(
            name_value=args.name or rules.most_frequent_name(corpus),
            max_samples=args.max_samples,
        )
        hidden = rules.build_hidden_kv_set(inventory, config)
    rules.write_hidden(out / "hidden.jsonl", hidden)
    tasks = [generation.PromptTask(h.base.id, "orig", linearize(h.base, h.dialect))
             for h in hidden]
    generation.write_prompts(out / "prompts_hidden.jsonl", tasks)
    log.info("rules (%s): %d hidden samples", dialect.value, len(hidden))
    return 0


def cmd_align(args) -> int:
    corpus = read_corpus(args.corpus)
    meta = read_corpus_meta(args.corpus)
    lexicon = meta.get("lexicon")
    samples = corpus.train if args.split == "train" else corpus.test
    store = generation.load_store(args.pred) if args.pred else {}
    records = []
    for sample in samples:
        if args.text_field == "references":
            texts = list(sample.references)
        else:
            texts = [store.get((sample.id, "orig"), "")]
        for k, text in enumerate(texts):
            outcome = alignment.align_sample(sample, text, corpus.dialect, lexicon)
            records.append({
                "sample_id": sample.id,
                "text_index": k,
                "positions": {key: (p if not isinstance(p, alignment.Sentinel)
                                    else p.value)
                              for key, p in outcome.positions.items()},
                "unit_order": list(outcome.unit_order) if outcome.unit_order else None,
                "boundary_fraction": outcome.boundary_fraction,
            })
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True, ensure_ascii=False) + "\n")
    log.info("aligned %d texts", len(records))
    return 0


def cmd_generate(args) -> int:
    config = generation.GenerationConfig(
        endpoint=args.endpoint,
        protocol=args.protocol,
        credentials_env=args.credentials_env,
        timeout=args.timeout,
        max_concurrency=args.max_concurrency,
    )
    tasks = generation.read_prompts(args.prompts)
    store = generation.run_generation(config, tasks, args.out)
    log.info("generated %d outputs into %s", len(store), args.out)
    return 0


def _two_sided_report(args, label_a: str, label_b: str, paths_a, paths_b,
                      aspect: str) -> int:
    test_samples = read_samples(args.test)
    payload = _paired_eval(test_samples, paths_a, paths_b, label_a, label_b,
                           metric=args.metric, resamples=args.resamples,
                           boot_seed=args.boot_seed)
    payload["config"] = {
        "test": Path(args.test).name,
        label_a: [Path(p).name for p in paths_a],
        label_b: [Path(p).name for p in paths_b],
        "metric": args.metric,
    }
    payload["inputs"] = [reporting.file_stamp(args.test)] + \
        [reporting.file_stamp(p) for p in list(paths_a) + list(paths_b)]
    mark = payload["significance"]
    table = reporting.render_table(
        ["metric", label_a, label_b, "p-value"],
        [[args.metric, f"{payload[label_a]['mean']*100:.2f}{mark}",
          f"{payload[label_b]['mean']*100:.2f}", f"{payload['p_value']:.4f}"]])
    reporting.emit_report(args.out, aspect, payload, table)
    return 0


def cmd_eval_systematicity(args) -> int:
    return _two_sided_report(args, "atom", "combination", args.pred_atom,
                             args.pred_combination, "systematicity")


def cmd_eval_productivity(args) -> int:
    return _two_sided_report(args, "invisible", "visible", args.pred_invisible,
                             args.pred_visible, "productivity")


def cmd_eval_order(args) -> int:
    pairs, by_id, dialect = order_invariance.read_pairs(args.pairs)
    lexicon = _read_lexicon_arg(args.lexicon)
    store = generation.load_store(args.pred)
    report = order_invariance.evaluate_order_invariance(pairs, by_id, store,
                                                        dialect, lexicon)
    perf = None
    if args.test:
        test_samples = read_samples(args.test)
        cwio, n_scored, excluded = order_invariance.compute_cwio(
            test_samples, store, dialect, lexicon)
        perf_vec = _score_store(test_samples, store, args.metric, lexicon=lexicon)
        perf = perf_vec.mean
    else:
        originals = [by_id[p.sample_id] for p in pairs]
        cwio, n_scored, excluded = order_invariance.compute_cwio(
            originals, store, dialect, lexicon)
    report.cwio = cwio
    report.cwio_evaluated = n_scored
    report.cwio_excluded = excluded

    payload = report.to_json()
    payload["perf"] = perf
    payload["metric"] = args.metric
    payload["config"] = {"pairs": Path(args.pairs).name, "pred": Path(args.pred).name,
                         "test": Path(args.test).name if args.test else None}
    payload["inputs"] = [reporting.file_stamp(args.pairs), reporting.file_stamp(args.pred)] + \
        ([reporting.file_stamp(args.test)] if args.test else [])
    table = reporting.render_table(
        ["fid PBH", "fid POH", "ord PBH", "ord POH", "CWIO", "PERF"],
        [[f"{report.fidelity_pbh:.2f}", f"{report.fidelity_poh:.2f}",
          f"{report.ordering_pbh:.2f}", f"{report.ordering_poh:.2f}",
          f"{cwio:+.2f}" if cwio is not None else "n/a",
          f"{perf*100:.2f}" if perf is not None else "n/a"]])
    reporting.emit_report(args.out, "order", payload, table)
    return 0


def cmd_eval_rules(args) -> int:
    hidden = rules.read_hidden(args.hidden)
    store = generation.load_store(args.pred)
    results = []
    for hs in hidden:
        key = (hs.base.id, "orig")
        if key not in store:
            from .errors import MissingPrediction
            raise MissingPrediction(hs.base.id, "orig")
        results.append(rules.check_copy(hs, store[key]))
    proportions = rules.aggregate_rule_report(results)
    payload = {
        "n_samples": len(results),
        "proportions": proportions,
        "config": {"hidden": Path(args.hidden).name, "pred": Path(args.pred).name},
        "inputs": [reporting.file_stamp(args.hidden), reporting.file_stamp(args.pred)],
    }
    table = reporting.render_table(
        list(rules.RESULT_KEYS),
        [[f"{proportions[k]:.2f}" for k in rules.RESULT_KEYS]])
    reporting.emit_report(args.out, "rules", payload, table)
    return 0


def cmd_report(args) -> int:
    out = Path(args.dir)
    for path in sorted(out.glob("report_*.json")):
        payload = json.loads(path.read_text(encoding="utf-8"))
        aspect = payload.get("aspect", "unknown")
        lines = [f"{aspect} report (from {path.name})"]
        for key in sorted(payload):
            if key in ("aspect", "inputs"):
                continue
            lines.append(f"  {key}: {json.dumps(payload[key], sort_keys=True)}")
        print("\n".join(lines))
    return 0


# --------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spor",
        description="Build compositional-generalization evaluation suites from "
                    "data-to-text corpora and score model outputs against them.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load a source corpus and emit canonical files")
    p.add_argument("--dialect", choices=["triple", "kv"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    build = sub.add_parser("build", help="construct an evaluation suite")
    bsub = build.add_subparsers(dest="aspect", required=True)

    p = bsub.add_parser("systematicity")
    p.add_argument("--corpus", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS)
    p.add_argument("--r", type=float, default=DEFAULT_DIVERGENCE_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_systematicity)

    p = bsub.add_parser("productivity")
    p.add_argument("--corpus", required=True)
    p.add_argument("--sizes", "--N", dest="sizes",
                   default=",".join(str(n) for n in DEFAULT_SIZE_THRESHOLDS))
    p.add_argument("--r", type=float, default=DEFAULT_DIVERGENCE_THRESHOLD)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--domains", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_productivity)

    p = bsub.add_parser("order")
    p.add_argument("--corpus", required=True)
    p.add_argument("--variant", choices=["original", "match"], default="original")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_order)

    p = bsub.add_parser("rules")
    p.add_argument("--corpus", required=True)
    p.add_argument("--dialect", choices=["triple", "kv"], default=None)
    p.add_argument("--name", default=None)
    p.add_argument("--max-samples", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build_rules)

    p = sub.add_parser("align", help="dump per-sample alignment outcomes")
    p.add_argument("--corpus", required=True)
    p.add_argument("--split", choices=["train", "test"], default="test")
    p.add_argument("--text-field", choices=["references", "prediction"],
                   default="references")
    p.add_argument("--pred", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("generate", help="produce outputs via a completion endpoint")
    p.add_argument("--prompts", required=True)
    p.add_argument("--endpoint", default="echo:")
    p.add_argument("--protocol", choices=["plain", "openai"], default="plain")
    p.add_argument("--credentials-env", default="SPOR_API_TOKEN")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--max-concurrency", type=int, default=4)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    ev = sub.add_parser("eval", help="score predictions against a built suite")
    esub = ev.add_subparsers(dest="aspect", required=True)

    for aspect, flag_a, flag_b, fn in (
            ("systematicity", "pred-atom", "pred-combination", cmd_eval_systematicity),
            ("productivity", "pred-invisible", "pred-visible", cmd_eval_productivity)):
        p = esub.add_parser(aspect)
        p.add_argument("--test", required=True)
        p.add_argument(f"--{flag_a}", action="append", required=True,
                       dest=flag_a.replace("-", "_"))
        p.add_argument(f"--{flag_b}", action="append", required=True,
                       dest=flag_b.replace("-", "_"))
        p.add_argument("--metric", choices=["parent", "coverage"], default="parent")
        p.add_argument("--resamples", type=int, default=DEFAULT_BOOTSTRAP_RESAMPLES)
        p.add_argument("--boot-seed", type=int, default=0)
        p.add_argument("--out", required=True)
        p.set_defaults(func=fn)

    p = esub.add_parser("order")
    p.add_argument("--pairs", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--test", default=None)
    p.add_argument("--lexicon", default=None)
    p.add_argument("--metric", choices=["parent", "coverage"], default="parent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_order)

    p = esub.add_parser("rules")
    p.add_argument("--hidden", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval_rules)

    p = sub.add_parser("report", help="print the reports in a directory")
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except SporError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
