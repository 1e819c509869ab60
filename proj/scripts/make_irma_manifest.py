#!/usr/bin/env python3
"""Build an id,path,irma_code manifest from an IRMA-style label file.

The label file maps image ids to codes, one pair per line. Distributions of
the dataset vary in delimiter (semicolon, tab, comma or spaces) and in whether
ids carry an extension, so both are normalized here. Image files are located
by id under the given directory, trying common raster extensions.
"""

import argparse
import re
import sys
from pathlib import Path

EXTENSIONS = [".png", ".pgm", ".PNG", ".PGM"]
CODE_RE = re.compile(r"^[0-9a-z]{4}-[0-9a-z]{3}-[0-9a-z]{3}-[0-9a-z]{3}$")


def parse_label_line(line: str):
    line = line.strip()
    if not line or line.startswith("#"):
        return None
    for delim in (";", "\t", ","):
        if delim in line:
            parts = [p.strip() for p in line.split(delim)]
            break
    else:
        parts = line.split()
    if len(parts) < 2:
        raise ValueError(f"cannot split {line!r} into id and code")
    image_id, code = parts[0], parts[1]
    image_id = Path(image_id).stem  # drop any extension the list carries
    # some lists write codes without hyphens (13 characters)
    if "-" not in code and len(code) == 13:
        code = f"{code[0:4]}-{code[4:7]}-{code[7:10]}-{code[10:13]}"
    if not CODE_RE.match(code):
        raise ValueError(f"{code!r} is not a TTTT-DDD-AAA-BBB code")
    return image_id, code


def find_image(images_dir: Path, image_id: str):
    for ext in EXTENSIONS:
        candidate = images_dir / f"{image_id}{ext}"
        if candidate.exists():
            return candidate
    matches = list(images_dir.rglob(f"{image_id}.*"))
    for m in matches:
        if m.suffix in EXTENSIONS:
            return m
    return None


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--images", required=True, type=Path, help="directory holding the images")
    ap.add_argument("--labels", required=True, type=Path, help="id-to-code list")
    ap.add_argument("--out", required=True, type=Path, help="manifest CSV to write")
    ap.add_argument("--limit", type=int, default=0, help="stop after N rows (0 = all)")
    args = ap.parse_args()

    rows, missing, bad = [], 0, 0
    for lineno, line in enumerate(args.labels.read_text().splitlines(), 1):
        try:
            parsed = parse_label_line(line)
        except ValueError as e:
            print(f"warning: {args.labels}:{lineno}: {e}", file=sys.stderr)
            bad += 1
            continue
        if parsed is None:
            continue
        image_id, code = parsed
        path = find_image(args.images, image_id)
        if path is None:
            missing += 1
            continue
        rows.append(f"{image_id},{path},{code}")
        if args.limit and len(rows) >= args.limit:
            break

    if not rows:
        print("error: no usable rows; check --images and --labels", file=sys.stderr)
        return 1

    args.out.write_text("\n".join(rows) + "\n")
    print(f"wrote {args.out} ({len(rows)} rows, {missing} images missing, {bad} bad lines)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
