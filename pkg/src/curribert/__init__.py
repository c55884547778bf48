"""Small-corpus MLM pre-training and mental-health-disorder flagging, from scratch.

Submodules: corpus (ingest/windows/stats), tokenizer (subword vocab), autodiff
(reverse-mode tensors), optim (Adam), gradcheck (finite differences), model
(encoder + heads), training (pretrain/finetune loops), checkpoint (binary
format), evaluation (metrics/datasets), prompting (one-shot yes/no), synthdata
(seeded benchmark), cli (command line).

This module deliberately imports nothing heavy: the CLI applies the
CASE_THREADS cap before numpy first loads.
"""

__version__ = "0.1.0"
