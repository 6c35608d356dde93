"""Walk through the five-method phone example end to end.

Run: python demos/motivating_example.py
"""

from certflow.certify import AnalysisStats, analyze, check, encode, leaks
from certflow.corpus import load_fixture
from certflow.dataflow import Stats


def main():
    program = load_fixture("phone")
    print("methods:", ", ".join(sorted(program.methods())))

    # the producer side: compute summaries to a fixpoint
    astats = AnalysisStats()
    cert = analyze(program, stats=astats)
    print(f"\nanalysis took {astats.summarise_calls} summarise calls "
          f"({astats.changes} summary changes)")
    print(encode(cert))

    for leak in leaks(cert, program, entry_only=True):
        print(f"leak at entry {leak.method}: {leak.source} reaches {leak.sink}")

    # the consumer side: one summarise call per method, no fixpoint
    cstats = Stats()
    result = check(program, cert, stats=cstats)
    print(f"\nchecker verdict: {result.verdict} after {cstats.summarise_calls} summarise calls")


if __name__ == "__main__":
    main()
