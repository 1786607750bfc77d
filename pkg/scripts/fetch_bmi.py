#!/usr/bin/env python3
"""Download the New Zealand body-mass-index sample (700 adults) and write one value per line.

The data are the ``bmi.nz`` set from the R package VGAM, fetched from the
Rdatasets mirror.  They are not bundled with this repository.  The SHA-256
of the written file is printed so a local copy can be pinned; pass it back
with ``--expect`` to verify a later download.

    python3 scripts/fetch_bmi.py                 # writes data/bmi_nz.txt
    FOLDEDNORMAL_BMI=data/bmi_nz.txt pytest tests/test_acceptance.py
"""

import argparse
import csv
import hashlib
import io
import pathlib
import sys
import urllib.request

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/VGAM/bmi.nz.csv"


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--url", default=URL)
    ap.add_argument("--out", default="data/bmi_nz.txt")
    ap.add_argument("--expect", help="expected SHA-256 of the written file")
    args = ap.parse_args(argv)

    with urllib.request.urlopen(args.url, timeout=60) as resp:
        text = resp.read().decode("utf-8")
    rows = list(csv.DictReader(io.StringIO(text)))
    column = next(k for k in rows[0] if k.strip().lower() == "bmi")
    lines = "".join(f"{float(r[column])!r}\n" for r in rows)

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text("# BMI, VGAM::bmi.nz via Rdatasets\n" + lines, encoding="utf-8")
    digest = hashlib.sha256(out.read_bytes()).hexdigest()
    print(f"wrote {len(rows)} values to {out}")
    print(f"sha256 {digest}")
    if args.expect and args.expect != digest:
        print("checksum mismatch", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
