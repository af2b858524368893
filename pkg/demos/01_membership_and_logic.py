"""Membership shapes, support and core, and the min/max/complement logic."""

import numpy as np

from fuzzrisk.logic import fuzzy_and, fuzzy_not, fuzzy_or
from fuzzrisk.membership import Gaussian, Sigmoid, Trapezoid, Triangle, Universe, core, evaluate, support

fuel = Universe(10, 40)
efficient = Trapezoid(20.5, 28, 40, 40)
for mpg in (18, 25, 33):
    print(f"efficient({mpg} mpg) = {evaluate(efficient, mpg):.3f}")
print("support", support(efficient, fuel), "core", core(efficient, fuel))

u = Universe(0, 10)
shapes = {"triangle": Triangle(2, 5, 8), "gaussian": Gaussian(5, 1.5), "sigmoid": Sigmoid(2, 6)}
xs = np.linspace(0, 10, 6)
for name, mf in shapes.items():
    print(f"{name:>9}", np.round(mf(xs), 3))

# graded truth: the crisp tables fall out at 0 and 1
a, b = 0.7, 0.4
print("a AND b", fuzzy_and(a, b), "a OR b", fuzzy_or(a, b), "NOT a", round(fuzzy_not(a), 12))
for p in (0, 1):
    for q in (0, 1):
        print(p, q, "and", fuzzy_and(p, q), "or", fuzzy_or(p, q))
