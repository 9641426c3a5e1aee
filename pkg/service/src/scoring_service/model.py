"""Cross-encoder inference over (query, text) pairs."""

from __future__ import annotations

import threading
from typing import Sequence

import torch
from transformers import AutoModelForSequenceClassification, AutoTokenizer


class ModelLoadError(RuntimeError):
    """The relevance model could not be loaded or is unusable for scoring."""


class CrossEncoderScorer:
    """Scores sequence pairs with a pretrained single-logit relevance model.

    The raw relevance logit is returned uncalibrated. Inference runs in eval
    mode under ``torch.inference_mode`` and forward passes are serialized by
    an internal lock, so identical requests produce identical scores
    regardless of concurrent callers. Inputs longer than ``max_length``
    tokens are truncated, longest sequence first.
    """

    def __init__(self, model_name: str, *, max_length: int = 512, batch_size: int = 32):
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModelForSequenceClassification.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadError(f"cannot load model {model_name!r}: {exc}") from exc
        num_labels = self._model.config.num_labels
        if num_labels != 1:
            raise ModelLoadError(
                f"model {model_name!r} has {num_labels} output labels, "
                "expected a single relevance logit"
            )
        self._model.eval()
        self.model_name = model_name
        self.max_length = max_length
        self.batch_size = batch_size
        self._lock = threading.Lock()

    def score(self, query: str, texts: Sequence[str]) -> list[float]:
        """Relevance logits for (query, text) pairs, aligned with ``texts``."""
        out: list[float] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            encoded = self._tokenizer(
                [query] * len(chunk),
                chunk,
                padding=True,
                truncation=True,
                max_length=self.max_length,
                return_tensors="pt",
            )
            with self._lock, torch.inference_mode():
                logits = self._model(**encoded).logits
            out.extend(float(v) for v in logits[:, 0])
        return out
