#!/usr/bin/env python3
"""Rebuild data/mnist/*.gz from the digit subset shipped in the npm `mnist` package.

Usage: npm pack mnist && tar xzf mnist-*.tgz && python3 scripts/mnist_subset_from_npm.py package data/mnist
"""
import gzip
import json
import os
import random
import struct
import sys

SIDE = 28
TRAIN, TEST = 5000, 1000


def load(pkg):
    samples = []
    for digit in range(10):
        with open(os.path.join(pkg, "src", "digits", f"{digit}.json")) as f:
            raw = json.load(f)["data"]
        px = SIDE * SIDE
        for i in range(len(raw) // px):
            img = bytes(min(255, max(0, round(v * 255))) for v in raw[i * px:(i + 1) * px])
            samples.append((img, digit))
    return samples


def write(out, prefix, samples):
    with gzip.GzipFile(os.path.join(out, f"{prefix}-images-idx3-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 2051, len(samples), SIDE, SIDE))
        for img, _ in samples:
            f.write(img)
    with gzip.GzipFile(os.path.join(out, f"{prefix}-labels-idx1-ubyte.gz"), "wb", mtime=0) as f:
        f.write(struct.pack(">II", 2049, len(samples)))
        f.write(bytes(lbl for _, lbl in samples))


def main():
    pkg, out = sys.argv[1], sys.argv[2]
    samples = load(pkg)
    random.Random(20220101).shuffle(samples)
    write(out, "train", samples[:TRAIN])
    write(out, "t10k", samples[TRAIN:TRAIN + TEST])


if __name__ == "__main__":
    main()
