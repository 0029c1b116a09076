#!/usr/bin/env python3
"""Build a small blinded annotation study from a mock run and serve it.

Creates a benchmark, baseline and PAR outputs, draws a stratified sample,
then starts the annotation service. Point a browser at the printed URL
(build the UI bundle in frontend/ first, or interact with the JSON API
directly).
"""
import argparse
import sys
from pathlib import Path

from fidelity.cli import main as cli

CONFIG = """\
categories:
  explicit_gender: 40
  late_binding: 20
  winograd_coref: 40
"""


def run(argv):
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="runs/humaneval-demo")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--per-category", type=int, default=5)
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--annotators", default="annotator1,annotator2")
    parser.add_argument("--ui-dir", default="frontend/dist")
    args = parser.parse_args()

    d = Path(args.workdir)
    d.mkdir(parents=True, exist_ok=True)
    (d / "config.yaml").write_text(CONFIG, encoding="utf-8")
    backend = f"mock:seed={args.seed}"

    run(["benchgen", "--config", str(d / "config.yaml"), "--seed", str(args.seed),
         "--out", str(d / "bench.jsonl")])
    run(["rerank", "--bench", str(d / "bench.jsonl"), "--mode", "baseline",
         "--backend", backend, "--out", str(d / "baseline.jsonl")])
    run(["rerank", "--bench", str(d / "bench.jsonl"), "--mode", "par",
         "--backend", backend, "--out", str(d / "par.jsonl")])
    run(["humaneval", "sample", "--bench", str(d / "bench.jsonl"),
         "--per-category", str(args.per_category), "--seed", str(args.seed),
         "--out", str(d / "sample.txt")])

    ui = Path(args.ui_dir)
    serve = ["humaneval", "serve", "--bench", str(d / "bench.jsonl"),
             "--sample", str(d / "sample.txt"),
             "--baseline", str(d / "baseline.jsonl"),
             "--reranked", str(d / "par.jsonl"),
             "--annotators", args.annotators,
             "--store", str(d / "judgments.jsonl"),
             "--seed", str(args.seed), "--port", str(args.port)]
    if ui.exists():
        serve += ["--ui-dir", str(ui)]
    else:
        print(f"note: no UI bundle at {ui}, serving the JSON API only")
    print(f"serving on http://127.0.0.1:{args.port}/ "
          f"(annotators: {args.annotators})")
    run(serve)


if __name__ == "__main__":
    main()
