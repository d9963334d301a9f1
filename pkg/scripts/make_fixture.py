"""Generate the two-domain synthetic corpus fixture under data/twodomain/.

Both domains share one token inventory but follow different bigram
transition tables: every token has three plausible successors, and the two
domains agree only on the most likely one.  The private and test corpora
come from domain A, the public corpus from domain B, so a model trained on
the public corpus is systematically worse on the test corpus than models
trained on private partitions.  All draws are seeded; rerunning this script
reproduces the committed files byte for byte.

Usage: python scripts/make_fixture.py [output_dir]
"""

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from pmixed import Vocabulary  # noqa: E402

N_TOKENS = 48
PRIVATE_LINES, PRIVATE_LEN = 1600, 24
PUBLIC_LINES, PUBLIC_LEN = 400, 24
TEST_LINES, TEST_LEN = 64, 16
SEED = 20240817


def successor_tables(rng):
    tokens = np.arange(N_TOKENS)
    table_a = {}
    table_b = {}
    for tok in tokens:
        choices = rng.permutation(N_TOKENS)
        choices = choices[choices != tok][:5]
        table_a[tok] = (choices[:3], np.array([0.55, 0.30, 0.15]))
        # domain B keeps A's top successor but swaps in two fresh ones
        table_b[tok] = (
            np.array([choices[0], choices[3], choices[4]]),
            np.array([0.40, 0.40, 0.20]),
        )
    return table_a, table_b


def sample_lines(rng, table, n_lines, line_len):
    lines = []
    for _ in range(n_lines):
        tok = int(rng.integers(N_TOKENS))
        walk = [tok]
        for _ in range(line_len - 1):
            successors, probs = table[walk[-1]]
            walk.append(int(rng.choice(successors, p=probs)))
        lines.append(" ".join(f"w{t:02d}" for t in walk))
    return lines


def main():
    out_dir = Path(sys.argv[1]) if len(sys.argv) > 1 else (
        Path(__file__).resolve().parents[1] / "data" / "twodomain"
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    table_a, table_b = successor_tables(rng)

    private_lines = sample_lines(rng, table_a, PRIVATE_LINES, PRIVATE_LEN)
    public_lines = sample_lines(rng, table_b, PUBLIC_LINES, PUBLIC_LEN)
    test_lines = sample_lines(rng, table_a, TEST_LINES, TEST_LEN)

    (out_dir / "private.txt").write_text("\n".join(private_lines) + "\n", encoding="utf-8")
    (out_dir / "public.txt").write_text("\n".join(public_lines) + "\n", encoding="utf-8")
    (out_dir / "test.txt").write_text("\n".join(test_lines) + "\n", encoding="utf-8")

    documents = [line.split() for line in private_lines + public_lines]
    Vocabulary.from_corpus(documents).to_file(out_dir / "vocab.txt")

    total = sum(len(line.split()) for line in private_lines + public_lines + test_lines)
    print(f"wrote {total} tokens across 3 corpora to {out_dir}")


if __name__ == "__main__":
    main()
