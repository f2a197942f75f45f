"""Pretrained encoder worker.

Reads one JSON request per line on stdin and writes one JSON response per
line on stdout. Requests carry a "cmd" field:

  hello        load tokenizer and model, add marker tokens
  piece_counts number of subword pieces per word
  encode       final-layer states at the two marker positions
  train_step   back-propagate given gradients w.r.t. those states, one Adam step
  save         write model and tokenizer to a directory
"""

import json
import os
import sys

os.environ.setdefault("TRANSFORMERS_VERBOSITY", "error")
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")


COMMANDS = {"hello", "piece_counts", "encode", "train_step", "save"}


class Worker:
    def __init__(self):
        self.tokenizer = None
        self.model = None
        self.optimizer = None

    def hello(self, req):
        import torch
        from transformers import AutoModel, AutoTokenizer
        from transformers.utils import logging as hf_logging

        hf_logging.disable_progress_bar()
        torch.manual_seed(req.get("seed", 0))
        torch.use_deterministic_algorithms(True, warn_only=True)
        torch.set_num_threads(req.get("threads") or torch.get_num_threads())
        cache = req.get("cache_dir")
        self.tokenizer = AutoTokenizer.from_pretrained(
            req["model"], cache_dir=cache, add_prefix_space=True
        )
        self.model = AutoModel.from_pretrained(req["model"], cache_dir=cache)
        added = self.tokenizer.add_special_tokens(
            {"additional_special_tokens": req.get("special_tokens", [])}
        )
        if added:
            self.model.resize_token_embeddings(len(self.tokenizer), mean_resizing=False)
        self.model.eval()
        overhead = len(self.tokenizer("x")["input_ids"]) - len(
            self.tokenizer("x", add_special_tokens=False)["input_ids"]
        )
        limit = self.tokenizer.model_max_length
        if not limit or limit > 100_000:
            limit = getattr(self.model.config, "max_position_embeddings", 512)
        return {
            "hidden_dim": self.model.config.hidden_size,
            "max_len": int(limit),
            "overhead": overhead,
            "name": self.model.config.model_type,
        }

    def piece_counts(self, req):
        counts = []
        for word in req["words"]:
            ids = self.tokenizer([word], is_split_into_words=True, add_special_tokens=False)
            counts.append(max(1, len(ids["input_ids"])))
        return {"counts": counts}

    def _forward(self, batch):
        import torch

        enc = self.tokenizer(
            [item["words"] for item in batch],
            is_split_into_words=True,
            padding=True,
            return_tensors="pt",
        )
        positions = []
        for i, item in enumerate(batch):
            word_ids = enc.word_ids(i)
            found = []
            for target in (item["open"], item["close"]):
                idx = next((t for t, w in enumerate(word_ids) if w == target), None)
                if idx is None:
                    raise ValueError(f"marker word {target} of item {i} was truncated")
                found.append(idx)
            positions.append(found)
        states = self.model(**enc).last_hidden_state
        rows = torch.arange(len(batch))
        open_idx = torch.tensor([p[0] for p in positions])
        close_idx = torch.tensor([p[1] for p in positions])
        return states[rows, open_idx], states[rows, close_idx]

    def encode(self, req):
        import torch

        with torch.no_grad():
            h_open, h_close = self._forward(req["batch"])
        return {"open": h_open.tolist(), "close": h_close.tolist()}

    def train_step(self, req):
        import torch

        if self.optimizer is None:
            self.optimizer = torch.optim.Adam(self.model.parameters(), lr=req["lr"])
        for group in self.optimizer.param_groups:
            group["lr"] = req["lr"]
        self.optimizer.zero_grad()
        h_open, h_close = self._forward(req["batch"])
        g_open = torch.tensor(req["grad_open"], dtype=h_open.dtype)
        g_close = torch.tensor(req["grad_close"], dtype=h_close.dtype)
        surrogate = (h_open * g_open).sum() + (h_close * g_close).sum()
        surrogate.backward()
        self.optimizer.step()
        return {}

    def save(self, req):
        self.model.save_pretrained(req["dir"])
        self.tokenizer.save_pretrained(req["dir"])
        return {}


def main():
    worker = Worker()
    out = sys.stdout
    sys.stdout = sys.stderr
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            req = json.loads(line)
            if req.get("cmd") not in COMMANDS:
                raise ValueError(f"unknown command {req.get('cmd')!r}")
            handler = getattr(worker, req["cmd"])
            resp = handler(req)
            resp["ok"] = True
        except Exception as exc:
            resp = {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
        out.write(json.dumps(resp) + "\n")
        out.flush()


if __name__ == "__main__":
    main()
