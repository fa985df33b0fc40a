#!/usr/bin/env python3
"""Write the scikit-learn 8x8 digits corpus as IDX files.

Produces train/test image and label files in the classic big-endian IDX
byte format so the experiment runner can exercise its dataset pipeline
without any network access. Pixel values (0..16) are rescaled to 0..255.
"""

import argparse
import pathlib
import struct

import numpy as np
from sklearn.datasets import load_digits


def write_idx(path: pathlib.Path, array: np.ndarray) -> None:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">BBBB", 0, 0, 8, array.ndim))
        for dim in array.shape:
            f.write(struct.pack(">i", dim))
        f.write(array.tobytes())


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/digits", help="output directory")
    parser.add_argument("--test-fraction", type=float, default=0.2)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    digits = load_digits()
    images = np.round(digits.images * (255.0 / 16.0)).astype(np.uint8)
    labels = digits.target.astype(np.uint8)

    rng = np.random.default_rng(args.seed)
    order = rng.permutation(len(labels))
    images, labels = images[order], labels[order]

    n_test = int(len(labels) * args.test_fraction)
    write_idx(out / "train-images-idx3-ubyte", images[n_test:])
    write_idx(out / "train-labels-idx1-ubyte", labels[n_test:])
    write_idx(out / "test-images-idx3-ubyte", images[:n_test])
    write_idx(out / "test-labels-idx1-ubyte", labels[:n_test])
    print(f"wrote {len(labels) - n_test} train / {n_test} test items to {out}")


if __name__ == "__main__":
    main()
