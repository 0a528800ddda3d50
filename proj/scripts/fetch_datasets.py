#!/usr/bin/env python3
"""Fetch the full MNIST / Fashion-MNIST IDX files (60k train / 10k test).

The bundled data/ subsets are enough for every test and desk-scale run; this
script is only needed for full-scale training. Files are verified against the
published SHA-256 digests and decompressed next to the bundled subsets, where
the loaders pick them up automatically.
"""

import argparse
import gzip
import hashlib
import sys
import urllib.request
from pathlib import Path

MIRRORS = {
    "mnist": [
        "https://ossci-datasets.s3.amazonaws.com/mnist/",
        "https://storage.googleapis.com/cvdf-datasets/mnist/",
    ],
    "fashion-mnist": [
        "http://fashion-mnist.s3-website.eu-central-1.amazonaws.com/",
    ],
}

FILES = {
    "mnist": {
        "train-images-idx3-ubyte.gz": "440fcabf73cc546fa21475e81ea370265605f56be210a4024d2ca8f203523609",
        "train-labels-idx1-ubyte.gz": "3552534a0a558bbed6aed32b30c495cca23d567ec52cac8be1a0730e8010255c",
        "t10k-images-idx3-ubyte.gz": "8d422c7b0a1c1c79245a5bcf07fe86e33eeafee792b84584aec276f5a2dbc4e6",
        "t10k-labels-idx1-ubyte.gz": "f7ae60f92e00ec6debd23a6088c31dbd2371eca3ffa0defaefb259924204aec6",
    },
    "fashion-mnist": {
        "train-images-idx3-ubyte.gz": "3aede38d61863908ad78613f6a32ed271626dd12800ba2636569512369268a84",
        "train-labels-idx1-ubyte.gz": "a04f17134ac03560a47e3764e11b92fc97de4d1bfaf8ba1a3aa29af54cc90845",
        "t10k-images-idx3-ubyte.gz": "346e55b948d973a97e58d2351dde16a484bd415d4595297633bb08f03db6a073",
        "t10k-labels-idx1-ubyte.gz": "67da17c76eaffca5446c3361aaab5c3cd6d1c2608764d35dfb1850b086bf8dd5",
    },
}


def fetch(dataset: str, out_dir: Path) -> bool:
    out_dir.mkdir(parents=True, exist_ok=True)
    ok = True
    for name, digest in FILES[dataset].items():
        target = out_dir / name.removesuffix(".gz")
        if target.exists():
            print(f"  {target} already present")
            continue
        blob = None
        for mirror in MIRRORS[dataset]:
            url = mirror + name
            try:
                print(f"  fetching {url}")
                blob = urllib.request.urlopen(url, timeout=60).read()
                break
            except OSError as e:
                print(f"    failed: {e}")
        if blob is None:
            print(f"  ERROR: could not fetch {name} from any mirror")
            ok = False
            continue
        actual = hashlib.sha256(blob).hexdigest()
        if actual != digest:
            print(f"  ERROR: checksum mismatch for {name}: {actual}")
            ok = False
            continue
        target.write_bytes(gzip.decompress(blob))
        print(f"  wrote {target}")
    return ok


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("datasets", nargs="*", default=["mnist", "fashion-mnist"],
                    choices=["mnist", "fashion-mnist"])
    ap.add_argument("--root", type=Path, default=Path("data"))
    args = ap.parse_args()
    ok = True
    for ds in args.datasets or ["mnist", "fashion-mnist"]:
        print(f"{ds}:")
        ok &= fetch(ds, args.root / ds)
    sys.exit(0 if ok else 1)


if __name__ == "__main__":
    main()
