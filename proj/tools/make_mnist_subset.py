#!/usr/bin/env python3
"""Write the 5000-image MNIST subset bundled with mlxtend as IDX files.

The subset (500 images per digit, taken from the MNIST training set) ships
inside the mlxtend wheel under a BSD-3 license. Usage:

    pip download mlxtend --no-deps -d /tmp/mlx
    python3 tools/make_mnist_subset.py /tmp/mlx/mlxtend-*.whl data/mnist
"""
import gzip
import io
import struct
import sys
import zipfile
from pathlib import Path

import numpy as np


def main() -> int:
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    wheel, out = Path(sys.argv[1]), Path(sys.argv[2])
    raw = zipfile.ZipFile(wheel).read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",")
    pixels = table[:, :-1].astype(np.uint8)
    labels = table[:, -1].astype(np.uint8)
    out.mkdir(parents=True, exist_ok=True)
    count = len(labels)
    with open(out / "mnist5k-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 2051, count, 28, 28))
        f.write(pixels.tobytes())
    with open(out / "mnist5k-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 2049, count))
        f.write(labels.tobytes())
    print(f"wrote {count} images to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
