#!/usr/bin/env python3
"""Convert image files to the flat-row CSV read by the image_cloud preset.

Each image becomes one line of comma-separated grayscale values in [0, 1],
row-major after resizing to SIZE x SIZE.

    python3 tools/images_to_csv.py --size 16 img1.png img2.png ... > images.csv
"""
import argparse
import sys

from PIL import Image


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=16, help="output side length in pixels")
    ap.add_argument("images", nargs="+")
    args = ap.parse_args()
    out = sys.stdout
    out.write(f"# {len(args.images)} images, {args.size}x{args.size} grayscale, row-major, values in [0,1]\n")
    for path in args.images:
        img = Image.open(path).convert("L").resize((args.size, args.size), Image.BILINEAR)
        out.write(",".join(f"{v / 255:.6g}" for v in img.getdata()) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
