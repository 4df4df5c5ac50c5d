"""LP threshold, optimum and gap for every gap family over a range of k.

    python3 scripts/gap_table.py --k-max 5 --out results/gap.csv
"""
import argparse
import csv
from pathlib import Path

from msched.cli import GAP_COLUMNS, gap_row
from msched.instances import GAP_FAMILIES
from msched.oracle import OracleBudget


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k-max", type=int, default=5)
    ap.add_argument("--out", default="results/gap.csv")
    args = ap.parse_args()
    rows = [gap_row((fam, k, OracleBudget())) for fam in sorted(GAP_FAMILIES)
            for k in range(1, args.k_max + 1)]
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=GAP_COLUMNS)
        w.writeheader()
        w.writerows(rows)
    for r in rows:
        print(f"{r['family']:>10} k={r['k']}  C={r['C']:>6} (reference {r['reference_C']:>5})"
              f"  OPT={r['OPT'] or '-':>12}  gap={r['gap_dec'] or '-'}")


if __name__ == "__main__":
    main()
