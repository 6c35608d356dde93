"""Analysis vs checking cost as generated programs grow.

Run: python demos/cost_gap.py [sizes...]   (default 100 300 1000)
"""

import sys

from certflow import bench


def main(argv):
    sizes = tuple(int(a) for a in argv) or (100, 300, 1000)
    rows = bench.run_bench(sizes, repeats=3)
    print(bench.format_tsv(rows), end="")
    for r in rows:
        print(f"{r.methods:>6} methods: checking did {r.check_calls} summarise calls, "
              f"analysis {r.analyze_calls} ({r.analyze_calls / r.check_calls:.1f} per method)")


if __name__ == "__main__":
    main(sys.argv[1:])
