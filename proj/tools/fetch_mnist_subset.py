#!/usr/bin/env python3
"""Assemble an MNIST subset in IDX format from package-registry mirrors.

The full MNIST archives are not always reachable from restricted build hosts,
but two widely mirrored packages ship real MNIST digits:

  * npm ``mnist`` (1.1.0):   10000 digits, grouped by class, values in [0,1]
  * PyPI ``mlxtend`` (0.24): 5000 digits as CSV, raw bytes plus a label column

This script downloads both with the stock ``npm`` and ``pip`` clients and
writes the usual four IDX files into ``<out>/mnist``:

  train-images-idx3-ubyte / train-labels-idx1-ubyte   (npm digits, shuffled)
  t10k-images-idx3-ubyte  / t10k-labels-idx1-ubyte    (mlxtend digits)

If the official archives are available, drop them into the same directory
instead; the C++ loader only cares about the IDX format.
"""

import argparse
import gzip
import json
import pathlib
import random
import struct
import subprocess
import tarfile
import tempfile
import zipfile


def write_idx_images(path, images, rows=28, cols=28):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, len(images), rows, cols))
        for img in images:
            fh.write(bytes(img))


def write_idx_labels(path, labels):
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, len(labels)))
        fh.write(bytes(labels))


def npm_digits(workdir):
    subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=workdir, check=True,
                   stdout=subprocess.DEVNULL)
    tgz = next(pathlib.Path(workdir).glob("mnist-*.tgz"))
    samples = []
    with tarfile.open(tgz) as tar:
        for digit in range(10):
            member = tar.extractfile(f"package/src/digits/{digit}.json")
            raw = json.load(member)["data"]
            for start in range(0, len(raw), 784):
                px = [min(255, max(0, round(v * 255))) for v in raw[start:start + 784]]
                samples.append((px, digit))
    return samples


def mlxtend_digits(workdir):
    subprocess.run(["pip", "download", "--no-deps", "-q", "-d", workdir, "mlxtend==0.24.0"],
                   check=True)
    wheel = next(pathlib.Path(workdir).glob("mlxtend-*.whl"))
    with zipfile.ZipFile(wheel) as zf:
        text = gzip.decompress(zf.read("mlxtend/data/data/mnist_5k.csv.gz")).decode()
    samples = []
    for line in text.splitlines():
        values = [int(float(v)) for v in line.split(",")]
        samples.append((values[:784], values[784]))
    return samples


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="data", help="data directory (default: data)")
    parser.add_argument("--seed", type=int, default=1234, help="shuffle seed for the train split")
    args = parser.parse_args()

    target = pathlib.Path(args.out) / "mnist"
    target.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        train = npm_digits(tmp)
        test = mlxtend_digits(tmp)
    random.Random(args.seed).shuffle(train)

    write_idx_images(target / "train-images-idx3-ubyte", [s[0] for s in train])
    write_idx_labels(target / "train-labels-idx1-ubyte", [s[1] for s in train])
    write_idx_images(target / "t10k-images-idx3-ubyte", [s[0] for s in test])
    write_idx_labels(target / "t10k-labels-idx1-ubyte", [s[1] for s in test])
    print(f"wrote {len(train)} train and {len(test)} test digits to {target}")


if __name__ == "__main__":
    main()
