"""Regenerate the bundled 20-user fixture corpus (and its ground truth)."""

import argparse
from pathlib import Path

from peerbursts.synth import GeneratorConfig, generate_corpus, write_corpus

DATA = Path(__file__).resolve().parents[1] / "src" / "peerbursts" / "data"

FIXTURE = GeneratorConfig(
    n_users=20,
    seed=2024,
    bursts_per_user_mean=6.0,
    posts_per_burst_mean=8.0,
    moc_phrase_rate=0.3,
    support_injection={"ses": 0.08, "ces": 0.05, "ns": 0.03},
    start_spread_days=60.0,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(DATA / "fixture_20users.jsonl"))
    ap.add_argument("--truth", default=str(DATA / "fixture_20users_truth.json"))
    args = ap.parse_args()
    posts, truth = generate_corpus(FIXTURE)
    write_corpus(posts, args.out)
    Path(args.truth).write_text(truth.to_json(), encoding="utf-8")
    print(f"{len(posts)} posts -> {args.out}")


if __name__ == "__main__":
    main()
