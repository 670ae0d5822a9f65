import os
import sys
from dataclasses import dataclass
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gpal.models import TransformerConfig, train_lm_and_bridge, train_nmt  # noqa: E402
from gpal.textcore import Corpus, generate_corpus, make_task  # noqa: E402

TINY_CLASSES = {"DET": 3, "PREP": 4, "CONJ": 2, "ADV": 6, "ADJ": 10, "VERB": 12, "NOUN": 20}
TINY_CONFIG = TransformerConfig(d_model=32, n_layers=1, n_heads=2, d_ff=64, max_len=16)
ARTIFACTS = Path(os.environ.get("GPAL_ARTIFACTS", Path(__file__).resolve().parent.parent / ".artifacts"))


@dataclass
class TinySetup:
    task: object
    train: Corpus
    heldout: Corpus
    nmt: object
    lm: object
    bridge: object


@pytest.fixture(scope="session")
def tiny() -> TinySetup:
    """A 57-word task with small models: seconds to train, good enough to attack."""
    task = make_task(0, class_sizes=TINY_CLASSES, length_range=(5, 10))
    train, held = generate_corpus(task, 2200, "L1").split(200)
    nmt, _ = train_nmt(train, TINY_CONFIG, epochs=15, seed=0, heldout=held, stop_bleu=95)
    lm, bridge, _ = train_lm_and_bridge(train.sources, nmt, TINY_CONFIG, epochs=4, seed=0)
    return TinySetup(task, train, held, nmt, lm, bridge)


@pytest.fixture(scope="session")
def tiny_files(tiny, tmp_path_factory):
    from gpal.models import save_checkpoint
    from gpal.textcore import save_tsv

    root = tmp_path_factory.mktemp("tiny")
    return {
        "corpus": str(save_tsv(tiny.heldout, root / "heldout.tsv")),
        "nmt": str(save_checkpoint(tiny.nmt, root / "nmt.ckpt")),
        "lm": str(save_checkpoint((tiny.lm, tiny.bridge), root / "lm.ckpt")),
        "root": root,
    }


@pytest.fixture(scope="session")
def artifacts():
    """Full-size models, trained once and cached under ``.artifacts``."""
    from gpal.harness.artifacts import build_artifacts

    return build_artifacts(ARTIFACTS)


def pytest_terminal_summary(terminalreporter):
    from acceptance_runs import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
