from __future__ import annotations

import torch
from torch import nn
from torch.nn.utils.rnn import pack_padded_sequence

from ..textprep import PAD_ID


class BiLSTMClassifier(nn.Module):
    """Embedding -> one bidirectional LSTM layer -> [h_fwd; h_bwd] -> dropout -> linear."""

    def __init__(self, vocab_size: int, embedding_dim: int = 300, hidden_size: int = 128, dropout: float = 0.5,
                 num_classes: int = 2):
        super().__init__()
        self.embedding = nn.Embedding(vocab_size, embedding_dim, padding_idx=PAD_ID)
        self.lstm = nn.LSTM(embedding_dim, hidden_size, num_layers=1, batch_first=True, bidirectional=True)
        self.dropout = nn.Dropout(dropout)
        self.head = nn.Linear(2 * hidden_size, num_classes)

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        # all-stopword comments encode to zero tokens; the LSTM still needs one step
        lengths = attention_mask.sum(dim=1).clamp(min=1)
        width = int(lengths.max())
        emb = self.embedding(input_ids[:, :width])
        packed = pack_padded_sequence(emb, lengths.cpu(), batch_first=True, enforce_sorted=False)
        _, (h_n, _) = self.lstm(packed)
        feats = torch.cat([h_n[-2], h_n[-1]], dim=1)
        return self.head(self.dropout(feats))


class TransformerClassifier(nn.Module):
    """Adapter giving a Hugging Face sequence classifier the (ids, mask) -> logits signature."""

    def __init__(self, hf_model: nn.Module):
        super().__init__()
        self.hf = hf_model

    @property
    def encoder(self) -> nn.Module:
        return self.hf.base_model

    def forward(self, input_ids: torch.Tensor, attention_mask: torch.Tensor) -> torch.Tensor:
        return self.hf(input_ids=input_ids, attention_mask=attention_mask).logits
