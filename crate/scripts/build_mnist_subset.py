#!/usr/bin/env python3
"""Build the bundled 10,000-digit MNIST subset as gzipped IDX files.

Source: the `mnist` npm package (src/digits/<d>.json, grayscale in [0,1]
rounded to three decimals). Raw bytes are recovered as round(v * 255).

    npm pack mnist && tar xzf mnist-*.tgz
    python3 scripts/build_mnist_subset.py package/src/digits data/mnist
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def write_idx(path, magic, dims, payload):
    header = struct.pack(">I", magic) + b"".join(struct.pack(">I", d) for d in dims)
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(header + bytes(payload))


def main(src, out, n_test=2000, seed=0):
    samples = []
    for digit in range(10):
        data = json.loads((Path(src) / f"{digit}.json").read_text())["data"]
        for i in range(0, len(data), 784):
            pixels = [min(255, max(0, round(v * 255))) for v in data[i : i + 784]]
            samples.append((pixels, digit))
    random.Random(seed).shuffle(samples)
    splits = {"train": samples[:-n_test], "t10k": samples[-n_test:]}
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, rows in splits.items():
        images = [p for pixels, _ in rows for p in pixels]
        labels = [label for _, label in rows]
        write_idx(out / f"{name}-images-idx3-ubyte.gz", 0x803, [len(rows), 28, 28], images)
        write_idx(out / f"{name}-labels-idx1-ubyte.gz", 0x801, [len(rows)], labels)
        print(name, len(rows))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
