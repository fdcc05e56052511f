#!/usr/bin/env python3
# Copyright 2026 The vbsr Authors
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
"""Regenerates the 40x40 desk test images in data/images from scikit-image."""

import argparse
import pathlib

import numpy as np
import skimage.data
from skimage.color import rgb2gray
from skimage.transform import resize

SOURCES = ["astronaut", "camera", "coffee", "clock", "text"]


def to_gray_u8(img):
    if img.ndim == 3:
        img = rgb2gray(img[..., :3])
    img = img.astype(np.float64)
    if img.max() > 1.0:
        img = img / 255.0
    return img


def center_square(img):
    h, w = img.shape
    s = min(h, w)
    r0 = (h - s) // 2
    c0 = (w - s) // 2
    return img[r0:r0 + s, c0:c0 + s]


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--size", type=int, default=40)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "images"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in SOURCES:
        img = center_square(to_gray_u8(getattr(skimage.data, name)()))
        small = resize(img, (args.size, args.size), anti_aliasing=True)
        u8 = np.clip(np.rint(small * 255.0), 0, 255).astype(np.uint8)
        header = f"P5\n{args.size} {args.size}\n255\n".encode("ascii")
        (out / f"{name}.pgm").write_bytes(header + u8.tobytes())
        print(f"wrote {out / (name + '.pgm')}")


if __name__ == "__main__":
    main()
