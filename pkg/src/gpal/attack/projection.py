from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..models.lm import EmbeddingBridge
from ..textcore.vocab import EOS, SPECIAL_IDS
from .config import LM_BRIDGED, NMT_RAW


class ProjectionError(ValueError):
    pass


@dataclass(frozen=True)
class ProjectionIndex:
    """Unit-norm vocabulary rows in the search space; excluded ids never win."""

    rows: np.ndarray
    excluded: tuple[int, ...]
    zero_norm: tuple[int, ...]
    embedding_space: str

    @property
    def allowed_mask(self) -> np.ndarray:
        mask = np.ones(self.rows.shape[0], dtype=bool)
        mask[list(self.excluded)] = False
        return mask


def build_index(src_table: np.ndarray, bridge: EmbeddingBridge | None,
                embedding_space: str = LM_BRIDGED) -> ProjectionIndex:
    if embedding_space == LM_BRIDGED:
        if bridge is None:
            raise ProjectionError("lm_bridged projection needs a bridge")
        vecs = bridge.apply(src_table)
    elif embedding_space == NMT_RAW:
        vecs = np.array(src_table, dtype=np.float64)
    else:
        raise ProjectionError(f"unknown embedding space {embedding_space!r}")
    norms = np.linalg.norm(vecs, axis=1)
    zero = tuple(int(i) for i in np.flatnonzero(norms == 0))
    safe = np.where(norms == 0, 1.0, norms)
    rows = vecs / safe[:, None]
    excluded = tuple(sorted(set(SPECIAL_IDS) | set(zero)))
    return ProjectionIndex(rows, excluded, zero, embedding_space)


def project_tokens(index: ProjectionIndex, bridge: EmbeddingBridge | None, e_g: np.ndarray,
                   src_table: np.ndarray, pinned_eos: np.ndarray | None = None):
    """Nearest allowed token per position by cosine in the index's space.

    Returns ``(ids, e_p)`` with ``e_p`` the NMT embeddings of the chosen ids.
    Positions flagged in ``pinned_eos`` always project to eos.  ``np.argmax``
    takes the first maximum, i.e. the lowest token id on ties.
    """
    e_g = np.asarray(e_g, dtype=np.float64)
    q = bridge.apply(e_g) if index.embedding_space == LM_BRIDGED else e_g
    norms = np.linalg.norm(q, axis=1)
    if pinned_eos is None:
        pinned_eos = np.zeros(len(q), dtype=bool)
    free = ~np.asarray(pinned_eos, dtype=bool)
    if np.any(norms[free] == 0):
        raise ProjectionError("zero-norm query vector")
    scores = (q / np.where(norms == 0, 1.0, norms)[:, None]) @ index.rows.T
    scores[:, list(index.excluded)] = -np.inf
    ids = scores.argmax(axis=1)
    ids = np.where(free, ids, EOS)
    return ids.astype(np.int64), src_table[ids].copy()
