#!/usr/bin/env python3
# Copyright 2026 The KAHM Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Rebuilds data/mnist/*.gz from the 10000 MNIST digits bundled in the npm
`mnist` package (MIT licensed, pixel values stored as value/255 rounded to
three decimals, which maps back to the original bytes exactly).

Usage: npm pack mnist && tar xzf mnist-*.tgz && \
       python3 tools/make_mnist_idx.py package/src/digits data/mnist
"""
import gzip
import json
import random
import struct
import sys
from pathlib import Path


def main() -> None:
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    samples = []
    for digit in range(10):
        flat = json.loads((src / f"{digit}.json").read_text())["data"]
        for k in range(len(flat) // 784):
            pixels = bytes(round(v * 255) for v in flat[k * 784:(k + 1) * 784])
            samples.append((pixels, digit))
    random.Random(20230601).shuffle(samples)
    dst.mkdir(parents=True, exist_ok=True)
    with gzip.GzipFile(dst / "mnist10k-images-idx3-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(samples), 28, 28))
        for pixels, _ in samples:
            f.write(pixels)
    with gzip.GzipFile(dst / "mnist10k-labels-idx1-ubyte.gz", "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(samples)))
        f.write(bytes(label for _, label in samples))


if __name__ == "__main__":
    main()
