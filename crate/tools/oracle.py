"""Independent oracle for the golden files under crates/core/data/v1.

Uses sympy partitions and Python fractions, and does not share any code path
with the Rust implementation. Small n are cross-checked by enumerating every
mapping.
"""
import itertools
import math
import sys
from fractions import Fraction
from pathlib import Path

from sympy.utilities.iterables import partitions


def cycle_lengths(f):
    n = len(f)
    seen_cycle = [False] * n
    lens = []
    for start in range(n):
        x = start
        for _ in range(n):
            x = f[x]
        if seen_cycle[x]:
            continue
        y, k = f[x], 1
        seen_cycle[x] = True
        while y != x:
            seen_cycle[y] = True
            y, k = f[y], k + 1
        lens.append(k)
    return lens


def brute(n):
    st = sb = 0
    for f in itertools.product(range(n), repeat=n):
        lens = cycle_lengths(f)
        st += math.lcm(*lens)
        sb += math.prod(lens)
    return Fraction(st, n**n), Fraction(sb, n**n)


def order_means(m):
    lt = pt = 0
    for p in partitions(m):
        count = math.factorial(m)
        for d, a in p.items():
            count //= d**a * math.factorial(a)
        lt += count * math.lcm(*p.keys())
        pt += count * math.prod(d**a for d, a in p.items())
    return Fraction(lt, math.factorial(m)), Fraction(pt, math.factorial(m))


def z_pmf(n):
    return [Fraction(math.factorial(n) * m, math.factorial(n - m) * n ** (m + 1)) for m in range(1, n + 1)]


def main(out):
    out = Path(out)
    max_m = 30
    table = [order_means(m) for m in range(1, max_m + 1)]
    with open(out / "order_table.csv", "w") as fh:
        fh.write("m,M_num,M_den,b_num,b_den\n")
        for m, (mm, bb) in enumerate(table, 1):
            fh.write(f"{m},{mm.numerator},{mm.denominator},{bb.numerator},{bb.denominator}\n")
    with open(out / "expectations.csv", "w") as fh:
        fh.write("n,E_T_num,E_T_den,E_B_num,E_B_den\n")
        for n in range(1, max_m + 1):
            pmf = z_pmf(n)
            assert sum(pmf) == 1
            et = sum(p * table[m][0] for m, p in enumerate(pmf))
            eb = sum(p * table[m][1] for m, p in enumerate(pmf))
            if n <= 6:
                assert (et, eb) == brute(n), n
            fh.write(f"{n},{et.numerator},{et.denominator},{eb.numerator},{eb.denominator}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/data/v1")
