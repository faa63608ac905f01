#!/usr/bin/env python3
"""Run MiniSat 2.2 (via python-sat) on a DIMACS file and print s/v lines."""
import sys

from pysat.formula import CNF
from pysat.solvers import Minisat22


def main() -> int:
    if len(sys.argv) != 2:
        print("usage: minisat.py FILE.cnf", file=sys.stderr)
        return 2
    f = CNF(from_file=sys.argv[1])
    with Minisat22(bootstrap_with=f.clauses) as s:
        if not s.solve():
            print("s UNSATISFIABLE")
            return 20
        model = set(s.get_model() or [])
    print("s SATISFIABLE")
    vals = [v if v in model else -v for v in range(1, f.nv + 1)]
    for i in range(0, len(vals), 20):
        print("v " + " ".join(map(str, vals[i:i + 20])))
    print("v 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())
