"""Shared fixtures: the committed two-domain corpus and a tiny fast corpus."""

import json
from pathlib import Path

import numpy as np
import pytest

from pmixed import ExperimentConfig

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    path = REPO_ROOT / "data" / "twodomain"
    if not path.exists():
        pytest.skip("two-domain fixture not generated; run scripts/make_fixture.py")
    return path


@pytest.fixture(scope="session")
def fixture_config(fixture_dir) -> ExperimentConfig:
    config = ExperimentConfig.from_file(fixture_dir / "config.json")
    return config.replace(
        private_corpus_path=str(fixture_dir / "private.txt"),
        public_corpus_path=str(fixture_dir / "public.txt"),
        test_corpus_path=str(fixture_dir / "test.txt"),
        vocab_path=str(fixture_dir / "vocab.txt"),
    )


@pytest.fixture(scope="session")
def tiny_corpus(tmp_path_factory) -> dict:
    """A miniature two-domain corpus for fast driver and CLI tests.

    Domain A walks tokens forward (i -> i+1 mod 8), domain B walks them
    backward; the test corpus follows domain A.
    """
    root = tmp_path_factory.mktemp("tiny_corpus")
    rng = np.random.default_rng(99)

    def lines(step, n_lines, length):
        out = []
        for _ in range(n_lines):
            tok = int(rng.integers(8))
            walk = [tok]
            for _ in range(length - 1):
                jump = step if rng.random() < 0.8 else int(rng.integers(1, 8))
                walk.append((walk[-1] + jump) % 8)
            out.append(" ".join(f"v{t}" for t in walk))
        return "\n".join(out) + "\n"

    (root / "private.txt").write_text(lines(1, 48, 8), encoding="utf-8")
    (root / "public.txt").write_text(lines(-1, 16, 8), encoding="utf-8")
    (root / "test.txt").write_text(lines(1, 4, 4), encoding="utf-8")
    vocab = "\n".join(["<unk>"] + [f"v{t}" for t in range(8)]) + "\n"
    (root / "vocab.txt").write_text(vocab, encoding="utf-8")

    config = {
        "private_corpus_path": str(root / "private.txt"),
        "public_corpus_path": str(root / "public.txt"),
        "test_corpus_path": str(root / "test.txt"),
        "vocab_path": str(root / "vocab.txt"),
        "order": 2,
        "smoothing_k": 0.1,
        "eps_g": 2.0,
        "delta": 1e-5,
        "T": 64,
        "alpha": 3,
        "q": 0.5,
        "n_models": 4,
        "mode": "conservative",
        "seed": 7,
        "runs": 2,
    }
    (root / "config.json").write_text(json.dumps(config, indent=2), encoding="utf-8")
    return {"root": root, "config_path": root / "config.json", "config": config}
