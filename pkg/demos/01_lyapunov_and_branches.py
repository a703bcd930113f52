"""Expansion averages and maximal monotone branches of the logistic map.

The map 4x(1-x) is conjugate to the tent map, so its orbit-averaged
log-derivative converges to log 2 for almost every start; the same orbits
carry a branch structure: around each point x there is a largest interval
on which the n-fold composition stays monotone, and the image of that
interval leaves room r_n(x) on both sides of the n-th iterate of x.
"""

import math

import numpy as np

from fiberdyn import (constant_sequence, ftle_fiber, logistic_map,
                      symbol_sequence, track_branch)
from fiberdyn.rng import make_generator

m = logistic_map()
seq = constant_sequence(m)

print("== expansion average (exponent of the logistic map) ==")
rng = make_generator(1)
for trial in range(5):
    x0 = float(rng.uniform(0, 1))
    val = ftle_fiber(seq, x0, 10**6)
    print(f"  x0 = {x0:.6f}: (1/n) sum log|Df| = {val:.6f}"
          f"   (log 2 = {math.log(2):.6f})")

print()
print("== the branch around x = 1/4 ==")
for n in (1, 2, 3, 5, 8):
    br = track_branch(seq, 0.25, n)
    print(f"  depth {n}: T = ({br.t_lo:.8f}, {br.t_hi:.8f}), "
          f"image = ({br.img_lo:.4f}, {br.img_hi:.4f}), "
          f"r_{n} = {br.r_history[-1]:.6f}")

br = track_branch(seq, 0.25, 2)
print(f"\n  depth-2 endpoints: left is the preimage of 1/2 "
      f"((2 - sqrt 2)/4 = {(2 - math.sqrt(2)) / 4:.8f}), right is 1/2")
print(f"  endpoint certificates: {br.lo_cut}, {br.hi_cut}")

print()
print("== branch-size words: 1 where r_i >= delta ==")
rng = make_generator(7)
for trial in range(4):
    x0 = float(rng.uniform(0, 1))
    br = track_branch(seq, x0, 12)
    word = symbol_sequence(br, 0.1)
    print(f"  x0 = {x0:.6f}: word(0.1) = {''.join(map(str, word))}, "
          f"mean r = {np.mean(br.r_history):.4f}")
