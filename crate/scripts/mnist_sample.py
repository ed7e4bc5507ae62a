#!/usr/bin/env python3
"""Build the small MNIST IDX files under data/mnist/ from the `mnist` npm package.

The npm package (https://github.com/cazala/mnist, MIT) ships 10,000 real MNIST
digits as normalized grayscale JSON. This script shuffles them with a fixed
seed and writes two disjoint IDX3 image files:

    data/mnist/train-sample-idx3-ubyte   (1,000 images)
    data/mnist/test-sample-idx3-ubyte    (2,000 images)

Usage:
    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/mnist_sample.py package/src/digits data/mnist
"""
import json
import random
import struct
import sys
from pathlib import Path


def write_idx3(path, images, rows=28, cols=28):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), rows, cols))
        for img in images:
            f.write(bytes(img))


def main():
    src, out = Path(sys.argv[1]), Path(sys.argv[2])
    images = []
    for digit in range(10):
        flat = json.loads((src / f"{digit}.json").read_text())["data"]
        for k in range(0, len(flat), 784):
            images.append([min(255, max(0, round(v * 255))) for v in flat[k:k + 784]])
    random.Random(20190405).shuffle(images)
    out.mkdir(parents=True, exist_ok=True)
    write_idx3(out / "train-sample-idx3-ubyte", images[:1000])
    write_idx3(out / "test-sample-idx3-ubyte", images[1000:3000])


if __name__ == "__main__":
    main()
