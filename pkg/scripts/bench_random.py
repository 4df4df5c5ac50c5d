"""Generate a seeded random corpus and benchmark every applicable scheme.

Writes one CSV for the makespan schemes and one for the weighted objective;
the last line of each printout is the empirical worst ratio.

    python3 scripts/bench_random.py --count 40 --outdir results
"""
import argparse
import os
import random
from pathlib import Path

from msched.cli import main as cli
from msched.instances import RandomSpec, gen_random, save_instance


def write_corpus(root: Path, count: int, weighted: bool) -> dict:
    by_variant = {}
    for s in range(count):
        r = random.Random(f"bench:{s}")
        variant = r.choice(("unrelated", "restricted", "uniform"))
        spec = RandomSpec(s, r.randint(2, 5), r.randint(2, 6 if not weighted else 4),
                          r.choice(("capped_inverse", "amdahl")), variant,
                          weighted=weighted, unit_floor=weighted)
        d = root / variant
        d.mkdir(parents=True, exist_ok=True)
        save_instance(gen_random(spec), d / f"r{s:03d}.json")
        by_variant[variant] = d
    return by_variant


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=40)
    ap.add_argument("--outdir", default="results")
    args = ap.parse_args()
    out = Path(args.outdir)
    os.environ.setdefault("MSCHED_THREADS", str(os.cpu_count() or 1))
    extra = {"unrelated": "", "restricted": ",restricted", "uniform": ",uniform"}
    for weighted in (False, True):
        tag = "weighted" if weighted else "makespan"
        dirs = write_corpus(out / f"corpus_{tag}", args.count, weighted)
        for variant, d in sorted(dirs.items()):
            schemes = "filtered" + extra[variant] if weighted else "simple,filtered,beta" + extra[variant]
            print(f"== {tag} / {variant}")
            cli(["bench", "--dir", str(d), "--schemes", schemes, "--objective", tag,
                 "--csv", str(out / f"bench_{tag}_{variant}.csv")])


if __name__ == "__main__":
    main()
