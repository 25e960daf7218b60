#!/usr/bin/env python3
# Copyright 2026 The prunegan Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Convert the digit JSON files of the npm `mnist` package into IDX files.

The package ships 10 files src/digits/<d>.json, each {"data": [...]} holding
flattened 28x28 grayscale samples in [0, 1]. The last tenth of every digit
becomes the test split; both splits are interleaved round-robin by digit.
"""
import argparse
import json
import struct
from pathlib import Path

SIZE = 28 * 28


def write_images(path, samples):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
        for s in samples:
            f.write(bytes(min(255, max(0, round(v * 255))) for v in s))


def write_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))


def interleave(per_digit):
    out = []
    longest = max(len(v) for v in per_digit.values())
    for i in range(longest):
        for d in range(10):
            if i < len(per_digit[d]):
                out.append((per_digit[d][i], d))
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=Path)
    ap.add_argument("out_dir", type=Path)
    args = ap.parse_args()

    train, test = {}, {}
    for d in range(10):
        raw = json.loads((args.digits_dir / f"{d}.json").read_text())["data"]
        samples = [raw[i:i + SIZE] for i in range(0, len(raw) - SIZE + 1, SIZE)]
        n_test = len(samples) // 10
        train[d] = samples[: len(samples) - n_test]
        test[d] = samples[len(samples) - n_test:]

    args.out_dir.mkdir(parents=True, exist_ok=True)
    for prefix, split in (("train", train), ("t10k", test)):
        items = interleave(split)
        write_images(args.out_dir / f"{prefix}-images-idx3-ubyte", [s for s, _ in items])
        write_labels(args.out_dir / f"{prefix}-labels-idx1-ubyte", [d for _, d in items])
        print(f"{prefix}: {len(items)} samples")


if __name__ == "__main__":
    main()
