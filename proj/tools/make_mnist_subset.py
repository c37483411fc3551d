#!/usr/bin/env python3
# Copyright 2026 The qdnn Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#    http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes a 5000-sample MNIST subset as gzipped IDX files.

The subset is the one bundled with the mlxtend wheel (mnist_5k.csv.gz, one
row per image: 784 pixel bytes followed by the label). Rows are shuffled with a
fixed seed since the bundled file is sorted by class. Pass either the csv.gz
file or a directory containing a downloaded mlxtend wheel.

    python3 tools/make_mnist_subset.py /tmp/mlxtend-0.24.0-py3-none-any.whl data/mnist-5k
"""
import gzip
import io
import random
import struct
import sys
import zipfile
from pathlib import Path


def read_rows(src: Path):
    if src.suffix == ".whl":
        with zipfile.ZipFile(src) as z:
            raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    else:
        raw = src.read_bytes()
    text = gzip.decompress(raw).decode("ascii")
    rows = [list(map(int, line.split(","))) for line in text.splitlines() if line]
    return rows


def main():
    if len(sys.argv) != 3:
        print(__doc__)
        sys.exit(2)
    rows = read_rows(Path(sys.argv[1]))
    # the bundled rows are sorted by class; a tail validation split needs them mixed
    random.Random(20150101).shuffle(rows)
    out = Path(sys.argv[2])
    out.mkdir(parents=True, exist_ok=True)
    n = len(rows)
    images = io.BytesIO()
    images.write(struct.pack(">IIII", 0x803, n, 28, 28))
    labels = io.BytesIO()
    labels.write(struct.pack(">II", 0x801, n))
    for r in rows:
        assert len(r) == 785
        images.write(bytes(r[:784]))
        labels.write(bytes([r[784]]))
    # mtime=0 keeps the archives byte-reproducible
    for name, buf in (("train-images-idx3-ubyte.gz", images), ("train-labels-idx1-ubyte.gz", labels)):
        with open(out / name, "wb") as f, gzip.GzipFile(fileobj=f, mode="wb", mtime=0, filename="") as g:
            g.write(buf.getvalue())
    print(f"wrote {n} samples to {out}")


if __name__ == "__main__":
    main()
