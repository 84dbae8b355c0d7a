"""Convergence table for a built-in example, printed as markdown.

    python demos/convergence_table.py            # Example 1, h = 1/8 ... 1/128
    python demos/convergence_table.py 5 2/4 2/8 2/16
"""

import sys
from fractions import Fraction

from compactfd.bench import compare, emit, golden_for, run_study

example = int(sys.argv[1]) if len(sys.argv) > 1 else 1
hs = [float(Fraction(h)) for h in sys.argv[2:]] or [1 / 8, 1 / 16, 1 / 32, 1 / 64, 1 / 128]

report = run_study(example, hs)
print(emit(report, "md"))
misses = compare(report, golden_for(example))
print("reference rows matched" if not misses else "\n".join(map(str, misses)))
