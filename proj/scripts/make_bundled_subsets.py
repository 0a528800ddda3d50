#!/usr/bin/env python3
"""Build the bundled 10k-image IDX subsets shipped under data/.

Sources are the offline JSON mirrors of the original datasets published on npm:

  mnist          https://www.npmjs.com/package/mnist          (cazala/mnist, 10k images)
  fashion-mnist  https://www.npmjs.com/package/fashion-mnist  (Zalando data, 70k images)

Both packages redistribute the original image data unmodified (MNIST pixels are
stored as v/255 floats, Fashion-MNIST as raw 0-255 ints). We re-encode them as
standard IDX files, class-interleaved so that any prefix of the subset is
roughly class-balanced. For full-scale runs fetch the official 60k/10k splits
with scripts/fetch_datasets.py instead; the loaders prefer those when present.

Usage:
  npm install mnist fashion-mnist
  python3 scripts/make_bundled_subsets.py --node-modules ./node_modules --out data
"""

import argparse
import hashlib
import json
import random
import struct
from pathlib import Path

PER_CLASS_CAP = 1000
SHUFFLE_SEED = 20240501


def load_class(path: Path, scale: float) -> list[bytes]:
    flat = json.loads(path.read_text())["data"]
    if flat and isinstance(flat[0], list):  # fashion-mnist: list of 784-lists
        rows = flat
    else:  # mnist: one flat array
        rows = [flat[i : i + 784] for i in range(0, len(flat), 784)]
    out = []
    for row in rows:
        if len(row) != 784:  # fashion-mnist JSON carries a couple of empty rows
            continue
        out.append(bytes(int(round(v * scale)) for v in row))
    return out


def write_idx(images_path: Path, labels_path: Path, items: list[tuple[bytes, int]]) -> None:
    n = len(items)
    with open(images_path, "wb") as f:
        f.write(struct.pack(">iiii", 2051, n, 28, 28))
        for img, _ in items:
            f.write(img)
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">ii", 2049, n))
        f.write(bytes(lbl for _, lbl in items))


def interleave(classes: list[list[bytes]], rng: random.Random) -> list[tuple[bytes, int]]:
    pools = []
    for label, imgs in enumerate(classes):
        imgs = imgs[:PER_CLASS_CAP]
        rng.shuffle(imgs)
        pools.append([(img, label) for img in imgs])
    items = []
    while any(pools):
        for pool in pools:
            if pool:
                items.append(pool.pop())
    return items


def build(name: str, src_dir: Path, out_dir: Path, scale: float) -> None:
    rng = random.Random(SHUFFLE_SEED)
    classes = [load_class(src_dir / f"{c}.json", scale) for c in range(10)]
    items = interleave(classes, rng)
    out_dir.mkdir(parents=True, exist_ok=True)
    images = out_dir / "subset-images-idx3-ubyte"
    labels = out_dir / "subset-labels-idx1-ubyte"
    write_idx(images, labels, items)
    with open(out_dir / "checksums.sha256", "w") as f:
        for p in (images, labels):
            digest = hashlib.sha256(p.read_bytes()).hexdigest()
            f.write(f"{digest}  {p.name}\n")
    print(f"{name}: wrote {len(items)} images to {out_dir}")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--node-modules", type=Path, required=True)
    ap.add_argument("--out", type=Path, default=Path("data"))
    args = ap.parse_args()
    build("mnist", args.node_modules / "mnist" / "src" / "digits", args.out / "mnist", 255.0)
    build(
        "fashion-mnist",
        args.node_modules / "fashion-mnist" / "src" / "clothes",
        args.out / "fashion-mnist",
        1.0,
    )


if __name__ == "__main__":
    main()
