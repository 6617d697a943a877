import argparse
import pathlib


def out_dir(description):
    ap = argparse.ArgumentParser(description=description)
    ap.add_argument("--out", default="out", help="output directory (created if missing)")
    args = ap.parse_args()
    path = pathlib.Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for r in rows:
            fh.write(",".join(str(v) if isinstance(v, int) else format(float(v), ".17g") for v in r) + "\n")
