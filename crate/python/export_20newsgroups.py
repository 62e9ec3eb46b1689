"""Export 20 Newsgroups as a tarsim JSONL corpus.

Documents from the comp.* groups are labelled positive (about 26% of the
18,846 posts). Needs scikit-learn and network access on first use.

    python export_20newsgroups.py newsgroups.jsonl
    TARSIM_TREND_CORPUS=newsgroups.jsonl cargo test -p tarsim --test acceptance -- 7
"""

import argparse
import json

from sklearn.datasets import fetch_20newsgroups


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out")
    parser.add_argument("--prefix", default="comp.", help="newsgroup prefix counted as positive")
    args = parser.parse_args()

    data = fetch_20newsgroups(subset="all", remove=("headers", "footers", "quotes"))
    positives = 0
    with open(args.out, "w", encoding="utf-8") as f:
        for i, (text, target) in enumerate(zip(data.data, data.target)):
            label = int(data.target_names[target].startswith(args.prefix))
            positives += label
            f.write(json.dumps({"id": f"ng{i:05d}", "text": text, "label": label}) + "\n")
    total = len(data.data)
    print(f"{total} documents, {positives} positive ({100 * positives / total:.2f}%)")


if __name__ == "__main__":
    main()
