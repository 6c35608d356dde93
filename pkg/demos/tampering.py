"""What the checker does with a certificate someone edited in transit.

Run: python demos/tampering.py
"""

from certflow.certify import analyze, check
from certflow.corpus import load_fixture


def show(label, program, cert):
    r = check(program, cert)
    print(f"{label}: {r.verdict}")
    if r.failure:
        print("  " + r.failure.describe().replace("\n", "\n  "))


def main():
    program = load_fixture("phone")
    cert = analyze(program)
    show("untouched", program, cert)

    # hide the leak by deleting the offending pair from bar
    show("leak pair deleted from bar", program,
         cert.with_entry("App.bar/1", {("ret", "sym:num")}))

    # hide it everywhere it shows up
    hidden = cert
    for m in ("App.foo/1", "App.bar/1"):
        hidden = hidden.with_entry(m, {("ret", "sym:num")})
    show("leak pair deleted from foo and bar", program, hidden)

    # provide entries only for the harmless methods
    show("entry for foo dropped", program, cert.with_entry("App.foo/1", None))

    # claim more than the code does
    show("extra pair claimed for getId", program,
         cert.with_entry("App.getId/1", set(cert["App.getId/1"]) | {("ret", "sym:num")}))


if __name__ == "__main__":
    main()
