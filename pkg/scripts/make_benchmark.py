"""Materialize the bundled synthetic benchmark as CLI-ready files.

Writes the pre-training corpus as a directory of .txt documents plus the
labeled task as stratified train/test CSVs, so the full pipeline can be driven
through the command-line interface:

    python scripts/make_benchmark.py --out bench/
    curribert stats --corpus bench/corpus
"""

import argparse
import json
import sys
from pathlib import Path

from curribert.evaluation import stratified_split
from curribert.synthdata import corpus_bytes, make_pretrain_corpus, make_task


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--test-frac", type=float, default=0.2)
    parser.add_argument("--split-seed", type=int, default=0)
    args = parser.parse_args(argv)

    out = Path(args.out)
    corpus_dir = out / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)

    docs = make_pretrain_corpus()
    for doc in docs:
        (corpus_dir / f"{doc.doc_id}.txt").write_text(doc.text + "\n", encoding="utf-8")

    task = make_task()
    train, test = stratified_split(task, test_frac=args.test_frac, seed=args.split_seed)
    for name, rows in (("task_train.csv", train), ("task_test.csv", test)):
        lines = ["text,label"] + [f"{ex.text},{ex.label}" for ex in rows]
        (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")

    print(json.dumps({
        "corpus_dir": str(corpus_dir),
        "docs": len(docs),
        "corpus_bytes": corpus_bytes(docs),
        "train": len(train),
        "test": len(test),
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
