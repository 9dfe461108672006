import csv
import io
from contextlib import redirect_stdout

import pytest

from logtranslate.cli import main
from logtranslate.corpus import generate_dataset, preset_profile, write_corpus
from logtranslate.neural import Checkpoint

# The memorisation recipe: 32 fixed records, 64 cells, no dropout, at most 500
# epochs, validated on the training records themselves.
OVERFIT_RECORDS = 32
OVERFIT_ARGS = ["--arch", "mc", "--cells", "64", "--dropout", "0", "--epochs", "500",
                "--patience", "500", "--batch", "8", "--seed", "0"]


def overfit_corpus():
    return generate_dataset(preset_profile("TT", OVERFIT_RECORDS, seed=5))


@pytest.fixture(scope="session")
def overfit(tmp_path_factory):
    """Memorisation run through the command line, trained once per session.

    Returns a namespace-like dict with the records, corpus stem, checkpoint
    path, loaded checkpoint, per-epoch train losses and the command's stdout.
    """
    root = tmp_path_factory.mktemp("overfit")
    records = overfit_corpus()
    stem = root / "fixed32"
    write_corpus(records, stem)
    ckpt_path = root / "overfit.json"
    out = io.StringIO()
    with redirect_stdout(out):
        code = main(["-q", "train", *OVERFIT_ARGS, "--corpus", str(stem), "--val-corpus", str(stem),
                     "--out", str(ckpt_path)])
    assert code == 0, out.getvalue()
    with open(f"{ckpt_path}.history.csv", newline="") as fh:
        losses = [float(row["train_loss"]) for row in csv.DictReader(fh)]
    return {
        "records": records,
        "stem": stem,
        "path": ckpt_path,
        "ckpt": Checkpoint.load(ckpt_path),
        "train_losses": losses,
        "stdout": out.getvalue(),
    }
