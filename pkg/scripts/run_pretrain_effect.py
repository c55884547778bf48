"""Pre-training effect experiment: pretrain->finetune vs random-init->finetune.

For each seed, pre-trains an encoder on the bundled synthetic corpus, fine-tunes
it on the bundled labeled task, and compares test f1 against an arm fine-tuned
from a random initialization. Prints a per-seed table plus the aggregate.

    python scripts/run_pretrain_effect.py --seeds 5
"""

import argparse
import json
import sys
import time

import numpy as np

from curribert.evaluation import evaluate_model, stratified_split
from curribert.model import ModelConfig, init_model
from curribert.synthdata import make_pretrain_corpus, make_task
from curribert.tokenizer import build_vocab
from curribert.training import FinetuneConfig, PretrainConfig, finetune, pretrain

VOCAB_SIZE = 280


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--epochs", type=int, default=30, help="pre-training epochs")
    parser.add_argument("--lr", type=float, default=3e-3, help="pre-training learning rate")
    parser.add_argument("--finetune-lr", type=float, default=1e-3)
    parser.add_argument("--json", action="store_true", help="emit one JSON object instead of a table")
    args = parser.parse_args(argv)

    docs = make_pretrain_corpus()
    vocab = build_vocab(docs, target_size=VOCAB_SIZE)
    task = make_task()
    train, test = stratified_split(task, test_frac=0.2, seed=0)
    model_config = ModelConfig.from_preset(
        "small-toy", vocab_size=len(vocab), max_positions=128, dropout_prob=0.1
    )

    rows = []
    for seed in range(args.seeds):
        t0 = time.time()
        pretrain_config = PretrainConfig(
            mask_prob=0.15, epochs=args.epochs, lr=args.lr, effective_batch=16,
            micro_batch=16, window_len=32, overlap=8, seed=seed,
        )
        finetune_config = FinetuneConfig(epochs=3, batch=32, lr=args.finetune_lr, seed=seed)

        pre_model, _ = pretrain(docs, vocab, model_config, pretrain_config)
        tuned_pre, _ = finetune(pre_model, train, vocab, finetune_config)
        f1_pre = evaluate_model(tuned_pre, vocab, test).f1

        rand_model = init_model(model_config, seed=seed + 1000)
        tuned_rand, _ = finetune(rand_model, train, vocab, finetune_config)
        f1_rand = evaluate_model(tuned_rand, vocab, test).f1

        rows.append({
            "seed": seed,
            "f1_pretrained": round(f1_pre, 4),
            "f1_random_init": round(f1_rand, 4),
            "gap": round(f1_pre - f1_rand, 4),
            "seconds": round(time.time() - t0, 1),
        })
        if not args.json:
            r = rows[-1]
            print(f"seed {r['seed']}: pretrained {r['f1_pretrained']:.4f} "
                  f"random-init {r['f1_random_init']:.4f} gap {r['gap']:+.4f} "
                  f"({r['seconds']}s)", file=sys.stderr)

    gaps = [r["gap"] for r in rows]
    summary = {
        "rows": rows,
        "wins": sum(g > 0 for g in gaps),
        "seeds": args.seeds,
        "mean_gap": round(float(np.mean(gaps)), 4),
        "min_gap": round(min(gaps), 4),
    }
    if args.json:
        print(json.dumps(summary, indent=2))
    else:
        print(f"wins {summary['wins']}/{summary['seeds']}, "
              f"mean f1 gap {summary['mean_gap']:+.4f}, min {summary['min_gap']:+.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
