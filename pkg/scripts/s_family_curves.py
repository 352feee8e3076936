"""Data for the family of curves x -> f_{Z,s}(x), one per width s.

Writes CSV (x, s, f, err) and checks that the curves are strictly ordered in
s at every interior grid point.
"""
import argparse
import sys

from latgauss.cli import main as cli


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--s-list", default="0.5,0.75,1,1.5,2")
    ap.add_argument("--points", type=int, default=101)
    ap.add_argument("--out", default="s_family.csv")
    a = ap.parse_args()
    grid = ",".join(repr(k / (a.points - 1)) for k in range(a.points))
    code = cli(["curves", "--x-grid", grid, "--s-list", a.s_list, "--output", a.out])
    if code:
        sys.exit(code)
    with open(a.out) as fh:
        rows = [tuple(map(float, line.split(","))) for line in fh.read().split("\n")[1:] if line]
    widths = sorted({s for _, s, _, _ in rows})
    table = {(x, s): (f - e, f + e) for x, s, f, e in rows}
    xs = sorted({x for x, _, _, _ in rows if 0 < x < 1})
    loose = [(x, a, b) for x in xs for a, b in zip(widths, widths[1:]) if not table[(x, a)][1] < table[(x, b)][0]]
    print(f"wrote {len(rows)} rows to {a.out}; pairs not strictly ordered: {len(loose)}")


if __name__ == "__main__":
    main()
