#!/usr/bin/env python3
"""Fetch and install the five public ranked-choice-voting ballot files.

The acceptance tests for the RCV summary table expect the five strict
incomplete order (.soi) ballot files from preflib.org with these summary
statistics:

    tag    n (ballots)   m (alternatives)   mean list length
    rcv1        33,394            3               2.04
    rcv2       193,492            4               2.32
    rcv3        23,698            4               2.06
    rcv4       178,924            7               2.58
    rcv5       253,866            8               2.52

preflib reorganizes its archive from time to time, so this script does not
hard-code URLs. Instead it matches candidate files to the table by their
parsed (n, m, mean length) and installs the matches under data/rcv/ as
rcv1.soi .. rcv5.soi. Two modes:

    # candidates already downloaded somewhere
    python3 scripts/fetch_rcv_data.py --from-dir ~/Downloads/soi/

    # explicit URLs (one per candidate file)
    python3 scripts/fetch_rcv_data.py --urls https://.../x.soi https://.../y.soi

Requires network access in --urls mode. Files that match nothing in the
table are reported and left alone; expected rows with no match are listed
so you can fetch more candidates.
"""

import argparse
import shutil
import sys
import tempfile
import urllib.request
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from topkorders import parse_preflib, summary_stats  # noqa: E402

REPO = Path(__file__).resolve().parent.parent
DEST = REPO / "data" / "rcv"

EXPECTED = [
    ("rcv1", 33394, 3, 2.04),
    ("rcv2", 193492, 4, 2.32),
    ("rcv3", 23698, 4, 2.06),
    ("rcv4", 178924, 7, 2.58),
    ("rcv5", 253866, 8, 2.52),
]


def match_tag(path):
    try:
        s = summary_stats(parse_preflib(path))
    except Exception as exc:  # noqa: BLE001 - report and move on
        print(f"  skip {path.name}: unparseable ({exc})")
        return None
    for tag, n, m, mean_len in EXPECTED:
        if s.n == n and s.m == m and abs(s.mean_length - mean_len) <= 0.01:
            return tag
    print(
        f"  no match for {path.name}: n={s.n} m={s.m} "
        f"mean={s.mean_length:.3f}"
    )
    return None


def install(candidates):
    DEST.mkdir(parents=True, exist_ok=True)
    found = {}
    for path in candidates:
        tag = match_tag(path)
        if tag and tag not in found:
            shutil.copy(path, DEST / f"{tag}.soi")
            found[tag] = path.name
            print(f"  installed {path.name} -> data/rcv/{tag}.soi")
    missing = [tag for tag, *_ in EXPECTED if tag not in found]
    if missing:
        print(f"still missing: {', '.join(missing)}")
        return 1
    print("all five RCV files installed")
    return 0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    mode = ap.add_mutually_exclusive_group(required=True)
    mode.add_argument("--from-dir", help="directory of candidate .soi files")
    mode.add_argument("--urls", nargs="+", help="candidate file URLs")
    args = ap.parse_args()

    if args.from_dir:
        candidates = sorted(Path(args.from_dir).glob("*.soi"))
        if not candidates:
            print(f"no .soi files in {args.from_dir}")
            return 1
        return install(candidates)

    tmp = Path(tempfile.mkdtemp(prefix="rcv_fetch_"))
    candidates = []
    for url in args.urls:
        name = url.rsplit("/", 1)[-1] or "candidate.soi"
        out = tmp / name
        print(f"downloading {url}")
        try:
            with urllib.request.urlopen(url, timeout=60) as resp:
                out.write_bytes(resp.read())
        except OSError as exc:
            print(f"  failed: {exc}")
            continue
        candidates.append(out)
    if not candidates:
        print("no candidates downloaded")
        return 1
    return install(candidates)


if __name__ == "__main__":
    sys.exit(main())
