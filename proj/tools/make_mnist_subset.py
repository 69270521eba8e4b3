"""Write a 5000-image MNIST subset as IDX files (4000 train / 1000 test).

The rows come from the mnist_5k.csv.gz sample shipped inside the mlxtend wheel:
784 pixel columns (0..255) followed by the label.
"""
import argparse
import gzip
import io
import struct
import zipfile
from pathlib import Path

import numpy as np


def read_rows(wheel):
    with zipfile.ZipFile(wheel) as zf:
        raw = zf.read("mlxtend/data/data/mnist_5k.csv.gz")
    data = np.loadtxt(io.StringIO(gzip.decompress(raw).decode()), delimiter=",", dtype=np.int64)
    if data.shape[1] != 785:
        raise SystemExit(f"unexpected column count {data.shape[1]}")
    return data[:, :784].astype(np.uint8), data[:, 784].astype(np.uint8)


def write_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.write(images.tobytes())


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(labels.tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("wheel", help="path to mlxtend-*.whl")
    ap.add_argument("out", help="output directory, e.g. data/mnist")
    ap.add_argument("--train", type=int, default=4000)
    args = ap.parse_args()

    images, labels = read_rows(args.wheel)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    n = args.train
    write_images(out / "train-images-idx3-ubyte", images[:n])
    write_labels(out / "train-labels-idx1-ubyte", labels[:n])
    write_images(out / "t10k-images-idx3-ubyte", images[n:])
    write_labels(out / "t10k-labels-idx1-ubyte", labels[n:])
    print(f"{out}: {n} train, {len(images) - n} test")


if __name__ == "__main__":
    main()
