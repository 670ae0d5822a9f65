from __future__ import annotations

from pathlib import Path

from ..textcore.corpus import save_tsv
from ..textcore.synthetic import corpus_manifest, generate_corpus, make_task

N_PAIRS = 21000
N_HELDOUT = 1000


def write_synthetic_data(outdir, seed: int = 0, n_pairs: int = N_PAIRS,
                         n_heldout: int = N_HELDOUT) -> dict[str, Path]:
    """Write train/held-out TSVs for En->L1, En->L2 and the swapped L1->En direction.

    All three share the same source sentences in the same order.
    """
    if not 0 < n_heldout < n_pairs:
        raise ValueError("need 0 < n_heldout < n_pairs")
    out = Path(outdir)
    spec = make_task(seed)
    paths = {}
    for lang in spec.languages:
        corpus = generate_corpus(spec, n_pairs, lang)
        train, held = corpus.split(n_heldout)
        d = out / lang
        d.mkdir(parents=True, exist_ok=True)
        meta = corpus_manifest(spec, corpus, lang)
        paths[f"{lang}/train"] = save_tsv(train, d / "train.tsv", meta | {"split": "train"})
        paths[f"{lang}/heldout"] = save_tsv(held, d / "heldout.tsv", meta | {"split": "heldout"})
        if lang == spec.languages[0]:
            back = out / f"{lang}-En"
            back.mkdir(parents=True, exist_ok=True)
            meta = meta | {"direction": "reverse"}
            paths[f"{lang}-En/train"] = save_tsv(train.swapped(), back / "train.tsv",
                                                 meta | {"split": "train"})
            paths[f"{lang}-En/heldout"] = save_tsv(held.swapped(), back / "heldout.tsv",
                                                   meta | {"split": "heldout"})
    return paths
