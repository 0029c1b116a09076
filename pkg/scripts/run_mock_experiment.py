#!/usr/bin/env python3
"""Run the full offline experiment pipeline with the mock backend.

Generates a small benchmark, produces baseline translations, reranks with
SAR and PAR, classifies every output, and writes accuracy reports plus the
2x2 ablation table. Everything lands under --workdir and is reproducible
from --seed.
"""
import argparse
import json
import sys
from pathlib import Path

from fidelity.cli import main as cli

CONFIG = """\
categories:
  explicit_gender: 600
  late_binding: 200
  winograd_coref: 400
  neutral_profession: 200
  counter_stereotype: 100
"""


def run(argv):
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="runs/mock")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=4)
    args = parser.parse_args()

    d = Path(args.workdir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.yaml").write_text(CONFIG, encoding="utf-8")
    backend = f"mock:seed={args.seed}"
    jobs = str(args.jobs)

    run(["benchgen", "--config", str(d / "config.yaml"), "--seed", str(args.seed),
         "--out", str(d / "bench.jsonl"), "--target-out", str(d / "target.jsonl")])
    run(["translate", "--bench", str(d / "bench.jsonl"), "--backend", backend,
         "--jobs", jobs, "--out", str(d / "base.jsonl")])

    for mode in ("baseline", "sar", "par"):
        run(["rerank", "--bench", str(d / "bench.jsonl"), "--mode", mode,
             "--base", str(d / "base.jsonl"), "--backend", backend,
             "--jobs", jobs, "--out", str(d / f"{mode}.jsonl")])
        run(["classify", "--bench", str(d / "bench.jsonl"),
             "--outputs", str(d / f"{mode}.jsonl"), "--jobs", jobs,
             "--out", str(d / f"{mode}.verdicts.jsonl")])

    for mode in ("sar", "par"):
        run(["metrics", "--bench", str(d / "bench.jsonl"),
             "--verdicts", str(d / f"{mode}.verdicts.jsonl"),
             "--outputs", str(d / f"{mode}.jsonl"),
             "--paired", str(d / "baseline.verdicts.jsonl"),
             "--format", "json", "--out", str(d / f"{mode}.report.json")])

    run(["ablate", "--bench", str(d / "bench.jsonl"), "--backend", backend,
         "--jobs", jobs, "--out", str(d / "ablation.json")])

    for mode in ("sar", "par"):
        report = json.loads((d / f"{mode}.report.json").read_text(encoding="utf-8"))
        m = report["mcnemar_vs_paired"]
        print(f"{mode}: target_acc={report['target_acc']:.1f} "
              f"ergative_rate={report['ergative_rate']:.1f} "
              f"mcnemar b={m['b']} c={m['c']} p_exact={m['p_exact']:.3g}")
    print(f"artifacts in {d}")


if __name__ == "__main__":
    main()
