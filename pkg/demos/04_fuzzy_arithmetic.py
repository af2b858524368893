"""Alpha-cut arithmetic on fuzzy numbers, checked against a brute-force sup-min surface."""

from fuzzrisk.fuznum import arith, extension_oracle, is_nested, oracle_cut
from fuzzrisk.membership import Trapezoid, Triangle

cost = Triangle(8, 10, 13)
overrun = Trapezoid(1, 2, 3, 5)
for op in ("add", "sub", "mul", "div"):
    cuts = arith(op, cost, overrun, levels=5)
    print(op, "nested" if is_nested(cuts) else "NOT nested")
    for c in cuts:
        print(f"   alpha={c.alpha:.2f}  [{c.lo:8.4f}, {c.hi:8.4f}]")

surface = extension_oracle("add", cost, overrun, grid=401)
for c in arith("add", cost, overrun, levels=5):
    o = oracle_cut(surface, c.alpha)
    print(f"add alpha={c.alpha:.2f}  cut gap {max(abs(o.lo - c.lo), abs(o.hi - c.hi)):.4f}")
