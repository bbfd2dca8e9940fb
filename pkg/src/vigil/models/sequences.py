"""Chunking of ordered windows into short chains for the CRF models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SessionTooShort

SEQ_LEN = 7


def neighbour_matrix(n: int) -> np.ndarray:
    """S with S_ij = 1 iff |i - j| = 1."""
    S = np.zeros((n, n))
    i = np.arange(n - 1)
    S[i, i + 1] = S[i + 1, i] = 1.0
    return S


def chain_laplacian(n: int) -> np.ndarray:
    S = neighbour_matrix(n)
    return np.diag(S.sum(1)) - S


@dataclass(frozen=True, eq=False)
class SequenceBatch:
    sequences: list          # (X [n x d], y [n] or None) pairs
    index: list              # row positions of each sequence in the source matrix
    n: int = SEQ_LEN
    n_rows: int = 0

    def __len__(self) -> int:
        return len(self.sequences)

    def similarity(self, k: int) -> np.ndarray:
        return neighbour_matrix(len(self.index[k]))

    def reassemble(self, per_sequence) -> np.ndarray:
        """Scatter per-sequence outputs back to one value per window."""
        out = np.full(self.n_rows, np.nan)
        for pos, vals in zip(self.index, per_sequence):
            out[pos] = vals
        return out

    def subset(self, which) -> "SequenceBatch":
        which = list(which)
        return SequenceBatch([self.sequences[k] for k in which], [self.index[k] for k in which],
                             self.n, self.n_rows)


def chunk_sequences(X, y=None, lengths=None, n: int = SEQ_LEN) -> SequenceBatch:
    """Non-overlapping consecutive chunks of ``n`` windows inside each session.

    ``lengths`` gives the window count of each session (one session when
    omitted). A session's remainder becomes a final short sequence.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    rows = X.shape[0]
    lengths = [rows] if lengths is None else [int(v) for v in lengths]
    if sum(lengths) != rows:
        raise ValueError(f"session lengths sum to {sum(lengths)}, matrix has {rows} rows")
    seqs, index = [], []
    start = 0
    for L in lengths:
        if L < n:
            raise SessionTooShort(f"session of {L} windows is shorter than n={n}")
        for a in range(start, start + L, n):
            pos = np.arange(a, min(a + n, start + L))
            seqs.append((X[pos], None if y is None else np.asarray(y, dtype=np.float64)[pos]))
            index.append(pos)
        start += L
    return SequenceBatch(seqs, index, n, rows)
