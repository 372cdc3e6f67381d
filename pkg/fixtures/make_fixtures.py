#!/usr/bin/env python3
"""Regenerate the bundled fixture files deterministically.

Writes sample_32x32.png (textured RGB image in which every 2x4 grid cell
and every irregular region differs from its own mean colour), grid_2x4.csv
and irregular_8.csv (two 8-component segmentations of that image), and
review.txt. Run from the repo root: python fixtures/make_fixtures.py
"""

import os

import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))

REVIEW = "Great film with great acting but the ending was a mess\n"


def build_image() -> np.ndarray:
    rng = np.random.default_rng(20240811)
    ys, xs = np.indices((32, 32))
    base = np.stack(
        [
            120 + 60 * np.sin(xs / 5.0),
            90 + 50 * np.cos(ys / 7.0),
            100 + 40 * np.sin((xs + ys) / 9.0),
        ],
        axis=-1,
    )
    noise = rng.normal(0.0, 22.0, size=(32, 32, 3))
    return np.clip(base + noise, 0, 255).astype(np.uint8)


def grid_labels() -> np.ndarray:
    ys, xs = np.indices((32, 32))
    return (ys // 16) * 4 + xs // 8


def irregular_labels() -> np.ndarray:
    # Eight diagonal bands; each is connected and non-empty.
    ys, xs = np.indices((32, 32))
    t = xs + ys  # 0..62
    return np.minimum(7, t * 8 // 63)


def check_distinguishable(image: np.ndarray, labels: np.ndarray) -> None:
    # Every component must differ somewhere from its mean fill, otherwise
    # masking it is a no-op and planted-truth tests lose that component.
    for j in range(labels.max() + 1):
        sel = labels == j
        mean = np.floor(image[sel].mean(axis=0) + 0.5).astype(np.uint8)
        if (image[sel] == mean).all():
            raise SystemExit(f"component {j} is constant; adjust the texture")


def write_csv(path: str, labels: np.ndarray) -> None:
    lines = [",".join(str(v) for v in row) for row in labels]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def main() -> None:
    image = build_image()
    for labels in (grid_labels(), irregular_labels()):
        check_distinguishable(image, labels)
    Image.fromarray(image, mode="RGB").save(os.path.join(HERE, "sample_32x32.png"))
    write_csv(os.path.join(HERE, "grid_2x4.csv"), grid_labels())
    write_csv(os.path.join(HERE, "irregular_8.csv"), irregular_labels())
    with open(os.path.join(HERE, "review.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(REVIEW)
    print("fixtures written to", HERE)


if __name__ == "__main__":
    main()
