#!/usr/bin/env python3
"""Build a small stand-in corpus in the native CIFAR-10 / STL-10 binary layouts.

The real archives are large and need network access. This script cuts
square crops out of permissively licensed sample photographs that ship
with scikit-image, scikit-learn and matplotlib, downsamples them to 32x32
and 96x96, and writes:

    <out>/cifar-10-batches-bin/test_batch.bin   (label byte + 3072 planar bytes)
    <out>/stl10_binary/test_X.bin               (3x96x96, column-major planes)
    <out>/stl10_binary/test_y.bin               (one label byte per image, 1..10)
"""
import argparse
import os
import random

import numpy as np
from PIL import Image

SOURCES = [
    "skimage/data/astronaut.png",
    "skimage/data/chelsea.png",
    "skimage/data/coffee.png",
    "skimage/data/rocket.jpg",
    "skimage/data/motorcycle_left.png",
    "sklearn/datasets/images/china.jpg",
    "sklearn/datasets/images/flower.jpg",
    "matplotlib/mpl-data/sample_data/grace_hopper.jpg",
]


def find(rel):
    import site
    for base in site.getsitepackages() + [site.getusersitepackages()]:
        path = os.path.join(base, rel)
        if os.path.exists(path):
            return path
    raise FileNotFoundError(rel)


def crops(count, rng):
    photos = [Image.open(find(s)).convert("RGB") for s in SOURCES]
    out = []
    for i in range(count):
        img = photos[i % len(photos)]
        w, h = img.size
        side = int(min(w, h) * rng.uniform(0.45, 0.9))
        x = rng.randrange(0, w - side + 1)
        y = rng.randrange(0, h - side + 1)
        out.append(img.crop((x, y, x + side, y + side)))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    pieces = crops(args.count, rng)

    cifar_dir = os.path.join(args.out, "cifar-10-batches-bin")
    stl_dir = os.path.join(args.out, "stl10_binary")
    os.makedirs(cifar_dir, exist_ok=True)
    os.makedirs(stl_dir, exist_ok=True)

    with open(os.path.join(cifar_dir, "test_batch.bin"), "wb") as f:
        for i, p in enumerate(pieces):
            a = np.asarray(p.resize((32, 32), Image.BOX), dtype=np.uint8)
            f.write(bytes([i % 10]))
            f.write(a.transpose(2, 0, 1).tobytes())

    with open(os.path.join(stl_dir, "test_X.bin"), "wb") as fx, open(
        os.path.join(stl_dir, "test_y.bin"), "wb"
    ) as fy:
        for i, p in enumerate(pieces):
            a = np.asarray(p.resize((96, 96), Image.BOX), dtype=np.uint8)
            # channel planes, each stored column by column
            fx.write(a.transpose(2, 1, 0).tobytes())
            fy.write(bytes([i % 10 + 1]))


if __name__ == "__main__":
    main()
