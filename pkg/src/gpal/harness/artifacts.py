"""Train and cache the full model set used by the experiments.

Everything lands under one directory with a ``manifest.json`` whose key
hashes the build settings and the model/data source code, so a stale cache
is rebuilt instead of silently reused.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from ..models.checkpoint import load_checkpoint, save_checkpoint
from ..models.layers import TransformerConfig
from ..models.training import corpus_perplexity, train_lm_and_bridge, train_nmt, unigram_perplexity
from ..textcore.corpus import load_tsv
from .data import write_synthetic_data

log = logging.getLogger(__name__)

_HASHED_PACKAGES = ("diffcore", "textcore", "models")


@dataclass(frozen=True)
class BuildSettings:
    seed: int = 0
    n_pairs: int = 21000
    n_heldout: int = 1000
    nmt_epochs: int = 30
    stop_bleu: float | None = 97.0
    lm_epochs: int = 6
    second_seed: int = 1


def source_fingerprint() -> str:
    root = Path(__file__).resolve().parent.parent
    h = hashlib.sha256()
    for pkg in _HASHED_PACKAGES:
        for f in sorted((root / pkg).glob("*.py")):
            h.update(f.name.encode())
            h.update(f.read_bytes())
    return h.hexdigest()


def cache_key(settings: BuildSettings) -> str:
    blob = json.dumps(asdict(settings), sort_keys=True) + source_fingerprint()
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# name -> (data directory, seed attribute)
NMT_RUNS = {
    "nmt_L1": ("L1", "seed"),
    "nmt_L1_second": ("L1", "second_seed"),
    "nmt_L2": ("L2", "seed"),
    "nmt_back": ("L1-En", "seed"),
}
LM_RUNS = {"lm_L1": "nmt_L1", "lm_back": "nmt_back"}


def build_artifacts(root, settings: BuildSettings | None = None, force: bool = False) -> dict:
    """Return the manifest, building whatever is missing or stale."""
    settings = settings or BuildSettings()
    root = Path(root)
    manifest_file = root / "manifest.json"
    key = cache_key(settings)
    if manifest_file.exists() and not force:
        manifest = json.loads(manifest_file.read_text())
        if manifest.get("key") == key and all(Path(p).exists() for p in manifest["paths"].values()):
            return manifest
    root.mkdir(parents=True, exist_ok=True)
    data = write_synthetic_data(root / "data", settings.seed, settings.n_pairs, settings.n_heldout)
    paths = {k: str(v) for k, v in data.items()}
    runs = {}
    config = TransformerConfig()
    for name, (lang, seed_attr) in NMT_RUNS.items():
        seed = getattr(settings, seed_attr)
        train = load_tsv(paths[f"{lang}/train"])
        held = load_tsv(paths[f"{lang}/heldout"])
        log.info("training %s (seed %d)", name, seed)
        model, hist = train_nmt(train, config, epochs=settings.nmt_epochs, seed=seed, heldout=held,
                                stop_bleu=settings.stop_bleu)
        info = {"epochs": len(hist.epoch_loss), "heldout_bleu": hist.heldout,
                "epoch_loss": hist.epoch_loss, "seconds": hist.seconds, "seed": seed}
        paths[name] = str(save_checkpoint(model, root / f"{name}.ckpt", info))
        runs[name] = info
    for name, nmt_name in LM_RUNS.items():
        lang = NMT_RUNS[nmt_name][0]
        train = load_tsv(paths[f"{lang}/train"])
        held = load_tsv(paths[f"{lang}/heldout"])
        nmt = load_checkpoint(paths[nmt_name])
        log.info("training %s over %s embeddings", name, nmt_name)
        t0 = time.perf_counter()
        lm, bridge, hist = train_lm_and_bridge(train.sources, nmt, config, epochs=settings.lm_epochs,
                                               seed=settings.seed)
        info = {"epochs": settings.lm_epochs, "epoch_loss": hist.epoch_loss,
                "seconds": time.perf_counter() - t0,
                "heldout_ppl": corpus_perplexity(lm, bridge, nmt.src_embeddings, held.sources),
                "unigram_ppl": unigram_perplexity(train.sources, held.sources, nmt.vocab_src)}
        paths[name] = str(save_checkpoint((lm, bridge), root / f"{name}.ckpt", info))
        runs[name] = info
    manifest = {"key": key, "settings": asdict(settings), "paths": paths, "runs": runs}
    manifest_file.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
