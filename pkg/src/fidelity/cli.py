"""Single command-line entry point for the pipeline.

Stages compose through JSON Lines files: benchgen -> translate -> rerank
-> classify -> metrics, plus the ablation harness and the human-eval
subcommands. Every command writes a ``<out>.manifest.json`` sidecar with
the config digest, seed, and stage timing so reports are reproducible.

Exit codes: 0 ok, 2 validation error, 3 backend failure, 4 partial results.
"""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import os
import sys
import time
from pathlib import Path

from . import benchgen as bg
from . import metrics as mt
from .backends import BackendError, BackendSpec, make_backend
from .cue_analysis import classify_preservation, extract_source_cue
from .hindi_text import default_lexicons
from .rerank import RerankConfig, run_pipeline

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_PARTIAL = 4


def _write_jsonl(records, path: Path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def _read_jsonl(path: Path) -> list[dict]:
    if not path.exists():
        raise bg.GenerationError(f"missing input file: {path}")
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _write_manifest(out_path: Path, command: str, seed, config: dict, timings: dict):
    digest = hashlib.sha256(
        json.dumps(config, sort_keys=True, default=str).encode()
    ).hexdigest()[:12]
    manifest = {
        "command": command,
        "seed": seed,
        "config": config,
        "config_digest": digest,
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
        "outputs": [str(out_path)],
    }
    with open(str(out_path) + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")


def _parallel_map(fn, items, jobs: int):
    """Order-preserving parallel map keyed by input order."""
    if jobs <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def cmd_benchgen(args) -> int:
    t0 = time.time()
    bundle = bg.load_resources(Path(args.resources) if args.resources else None)
    config = bg.load_config(Path(args.config)) if args.config else None
    bench = bg.generate_benchmark(config, bundle, seed=args.seed)
    out = Path(args.out)
    bg.write_benchmark(bench, out)
    if args.target_out:
        bg.write_benchmark(bg.select_target_subset(bench), Path(args.target_out))
    _write_manifest(out, "benchgen", args.seed,
                    {"counts": bench.counts}, {"generate": time.time() - t0})
    print(f"wrote {len(bench.instances)} instances to {out}")
    return EXIT_OK


def cmd_translate(args) -> int:
    t0 = time.time()
    bench = bg.read_benchmark(Path(args.bench))
    backend = make_backend(BackendSpec.parse(args.backend))
    from .rerank import GENERIC_PROMPT

    def one(inst):
        return {"id": inst.id, "text": backend.translate(GENERIC_PROMPT, inst.source_en)}

    records = _parallel_map(one, bench.instances, args.jobs)
    out = Path(args.out)
    _write_jsonl(records, out)
    _write_manifest(out, "translate", None, {"backend": args.backend},
                    {"translate": time.time() - t0})
    print(f"translated {len(records)} instances to {out}")
    return EXIT_OK


def _rerank_config(args, lexicalize=None, phenomenon_prompts=None) -> RerankConfig:
    return RerankConfig(
        k=args.k,
        lexicalize=args.lexicalize if lexicalize is None else lexicalize,
        phenomenon_prompts=(args.phenomenon_prompts if phenomenon_prompts is None
                            else phenomenon_prompts),
    )


def _run_rerank(bench, backend, mode, config, base_texts, professions, jobs):
    lex = default_lexicons()

    def one(inst):
        return run_pipeline(inst, backend, mode, config, lex,
                            base_text=base_texts.get(inst.id), professions=professions)

    return _parallel_map(one, bench.instances, jobs)


def cmd_rerank(args) -> int:
    t0 = time.time()
    bench = bg.read_benchmark(Path(args.bench))
    backend = make_backend(BackendSpec.parse(args.backend))
    base_texts = {}
    if args.base:
        base_texts = {r["id"]: r["text"] for r in _read_jsonl(Path(args.base))}
    config = _rerank_config(args)
    bundle = bg.load_resources()
    records = _run_rerank(bench, backend, args.mode, config, base_texts,
                          bundle.profession_terms(), args.jobs)
    out = Path(args.out)
    _write_jsonl(records, out)
    _write_manifest(out, "rerank", args.seed,
                    {"mode": args.mode, "backend": args.backend,
                     "rerank_config": config.__dict__},
                    {"rerank": time.time() - t0})
    partial = sum(1 for r in records if "warning" in r)
    if partial:
        print(f"warning: {partial} instances produced partial candidate pools",
              file=sys.stderr)
        return EXIT_PARTIAL
    print(f"reranked {len(records)} instances to {out}")
    return EXIT_OK


def cmd_classify(args) -> int:
    t0 = time.time()
    bench = bg.read_benchmark(Path(args.bench))
    outputs = _read_jsonl(Path(args.outputs))
    texts = {r["id"]: r.get("chosen_text", r.get("text", "")) for r in outputs}
    lex = default_lexicons()

    def one(inst):
        text = texts.get(inst.id)
        if text is None:
            raise bg.GenerationError(f"no output for benchmark id {inst.id}")
        cue = extract_source_cue(inst.source_en)
        if cue.gender in ("male", "female"):
            v = classify_preservation(cue, text, lex)
            state, rule_path, used_fallback = v.state, v.rule_path, v.used_fallback
        else:
            # Neutral/ambiguous sources: nothing to preserve; reported as
            # neutralized and scored by the no-wrong-gender convention.
            state, rule_path, used_fallback = "neutralized", "no_gendered_cue", False
        return {"id": inst.id, "state": state, "rule_path": rule_path,
                "used_fallback": used_fallback}

    records = _parallel_map(one, bench.instances, args.jobs)
    out = Path(args.out)
    _write_jsonl(records, out)
    _write_manifest(out, "classify", None, {"outputs": args.outputs},
                    {"classify": time.time() - t0})
    print(f"classified {len(records)} outputs to {out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    bench = bg.read_benchmark(Path(args.bench))
    verdicts = {r["id"]: r["state"] for r in _read_jsonl(Path(args.verdicts))}
    acc = mt.score_outputs(verdicts, bench)
    report: dict = {
        "per_category": acc.per_category,
        "target_acc": acc.target_acc,
        "full_acc": acc.full_acc,
        "scoring": mt.SCORING_NOTE,
    }
    erg = None
    if args.outputs:
        outputs = _read_jsonl(Path(args.outputs))
        erg = mt.ergative_rate([r.get("chosen_text", r.get("text", "")) for r in outputs])
        report["ergative_rate"] = erg
    if args.paired:
        other = {r["id"]: r["state"] for r in _read_jsonl(Path(args.paired))}
        other_acc = mt.score_outputs(other, bench)
        outcome = mt.paired_outcome(other_acc.correct_by_id, acc.correct_by_id)
        report["mcnemar_vs_paired"] = mt.mcnemar(outcome)
    if args.format == "json":
        print(json.dumps(report, ensure_ascii=False, indent=2))
    else:
        print(mt.render_accuracy_md(acc, erg))
        if "mcnemar_vs_paired" in report:
            m = report["mcnemar_vs_paired"]
            print(f"\nMcNemar vs paired run: chi2_cc={m['chi2_cc']:.2f} "
                  f"p_chi2={m['p_chi2']:.3g} p_exact={m['p_exact']:.3g} "
                  f"(b={m['b']}, c={m['c']})")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
        _write_manifest(Path(args.out), "metrics", None,
                        {"verdicts": args.verdicts}, {})
    return EXIT_OK


def cmd_ablate(args) -> int:
    t0 = time.time()
    bench = bg.read_benchmark(Path(args.bench))
    target = bg.select_target_subset(bench)
    backend = make_backend(BackendSpec.parse(args.backend))
    bundle = bg.load_resources()
    professions = bundle.profession_terms()
    lex = default_lexicons()
    runs: dict[tuple[bool, bool], mt.CategoryAccuracy] = {}
    for lexicalize in (False, True):
        for phen in (False, True):
            config = _rerank_config(args, lexicalize=lexicalize, phenomenon_prompts=phen)
            records = _run_rerank(target, backend, "par", config, {}, professions, args.jobs)
            verdicts = {}
            for inst, rec in zip(target.instances, records):
                cue = extract_source_cue(inst.source_en)
                verdicts[inst.id] = (
                    classify_preservation(cue, rec["chosen_text"], lex).state
                    if cue.gender in ("male", "female") else "neutralized"
                )
            runs[(lexicalize, phen)] = mt.score_outputs(verdicts, target)
    table = mt.ablation_table(runs)
    table["note"] += (
        "; mock-backend qualitative factorial only - published absolute "
        "accuracies require live translation systems and are not reproduced"
    )
    out = Path(args.out)
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(table, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
    _write_manifest(out, "ablate", args.seed, {"backend": args.backend},
                    {"ablate": time.time() - t0})
    for row in table["rows"]:
        print(f"lex={row['lexicalize']:>3} phen={row['phenomenon_prompts']:>3} "
              f"explicit={row['explicit_gender']:5.1f} late={row['late_binding']:5.1f} "
              f"wino={row['winograd_coref']:5.1f} target={row['target_acc']:5.1f}")
    return EXIT_OK


def cmd_humaneval(args) -> int:
    from . import humaneval as he

    if args.he_command == "sample":
        bench = bg.read_benchmark(Path(args.bench))
        target = bg.select_target_subset(bench)
        ids = he.stratified_sample(target, args.per_category, seed=args.seed)
        out = Path(args.out)
        out.write_text("\n".join(ids) + ("\n" if ids else ""), encoding="utf-8")
        print(f"sampled {len(ids)} instance ids to {out}")
        return EXIT_OK

    if args.he_command == "serve":
        if args.items:
            items = he.read_items(Path(args.items))
        else:
            bench = bg.read_benchmark(Path(args.bench))
            sample_ids = [
                line.strip()
                for line in Path(args.sample).read_text(encoding="utf-8").splitlines()
                if line.strip()
            ]
            baseline = {r["id"]: r.get("chosen_text", r.get("text", ""))
                        for r in _read_jsonl(Path(args.baseline))}
            reranked = {r["id"]: r.get("chosen_text", r.get("text", ""))
                        for r in _read_jsonl(Path(args.reranked))}
            items = he.build_items(bench, sample_ids, baseline, reranked)
            he.write_items(items, Path(args.store).with_suffix(".items.jsonl"))
        store = he.JudgmentStore(Path(args.store))
        app = he.create_app(
            items, store, args.annotators.split(","), seed=args.seed,
            allow_partial=args.allow_partial,
            ui_dir=Path(args.ui_dir) if args.ui_dir else None,
        )
        import uvicorn

        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return EXIT_OK

    if args.he_command == "report":
        items = he.read_items(Path(args.items))
        store = he.JudgmentStore(Path(args.store))
        summary = he.aggregate(store, items, seed=args.seed)
        print(json.dumps(summary, ensure_ascii=False, indent=2))
        return EXIT_OK

    raise bg.GenerationError(f"unknown humaneval subcommand {args.he_command!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fidelity")
    sub = parser.add_subparsers(dest="command", required=True)
    default_jobs = os.cpu_count() or 1

    p = sub.add_parser("benchgen", help="generate the benchmark")
    p.add_argument("--config", help="YAML file with per-category counts")
    p.add_argument("--resources", help="directory of resource TSV files")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--target-out", help="also write the target subset")
    p.set_defaults(func=cmd_benchgen)

    p = sub.add_parser("translate", help="baseline translations")
    p.add_argument("--bench", required=True)
    p.add_argument("--backend", required=True)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("rerank", help="SAR/PAR candidate reranking")
    p.add_argument("--bench", required=True)
    p.add_argument("--mode", choices=["baseline", "sar", "par"], required=True)
    p.add_argument("--base", help="baseline translations for repair mode")
    p.add_argument("--backend", required=True)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--lexicalize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--phenomenon-prompts", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rerank)

    p = sub.add_parser("classify", help="preservation verdicts for outputs")
    p.add_argument("--bench", required=True)
    p.add_argument("--outputs", required=True)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("metrics", help="accuracy tables and significance tests")
    p.add_argument("--verdicts", required=True)
    p.add_argument("--bench", required=True)
    p.add_argument("--outputs", help="output texts, enables ergative rate")
    p.add_argument("--paired", help="second verdict file for McNemar")
    p.add_argument("--format", choices=["md", "json"], default="md")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ablate", help="2x2 lexicalize x phenomenon-prompt ablation")
    p.add_argument("--bench", required=True)
    p.add_argument("--backend", default="mock")
    p.add_argument("--grid", default="lex,phen")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--lexicalize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--phenomenon-prompts", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=default_jobs)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("humaneval", help="human-evaluation protocol")
    hsub = p.add_subparsers(dest="he_command", required=True)

    hp = hsub.add_parser("sample", help="stratified target-subset sample")
    hp.add_argument("--bench", required=True)
    hp.add_argument("--per-category", type=int, default=50)
    hp.add_argument("--seed", type=int, default=0)
    hp.add_argument("--out", required=True)
    hp.set_defaults(func=cmd_humaneval)

    hp = hsub.add_parser("serve", help="run the annotation service")
    hp.add_argument("--items", help="prebuilt items file")
    hp.add_argument("--bench")
    hp.add_argument("--sample")
    hp.add_argument("--baseline")
    hp.add_argument("--reranked")
    hp.add_argument("--annotators", default="annotator1,annotator2")
    hp.add_argument("--store", required=True)
    hp.add_argument("--seed", type=int, default=0)
    hp.add_argument("--host", default="127.0.0.1")
    hp.add_argument("--port", type=int, default=8000)
    hp.add_argument("--allow-partial", action="store_true")
    hp.add_argument("--ui-dir", help="static annotation UI bundle directory")
    hp.set_defaults(func=cmd_humaneval)

    hp = hsub.add_parser("report", help="de-blinded aggregate summary")
    hp.add_argument("--items", required=True)
    hp.add_argument("--store", required=True)
    hp.add_argument("--seed", type=int, default=0)
    hp.set_defaults(func=cmd_humaneval)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BackendError as err:
        print(f"backend error: {err}", file=sys.stderr)
        return EXIT_BACKEND
    except (bg.ResourceError, bg.GenerationError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
