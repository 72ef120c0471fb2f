"""Amplitude amplification three ways.

Plain Grover search needs the right iteration count. The fixed-point
variant is driven by a phase schedule instead. The matching program
searches a cyclic haystack for a pattern.
"""

import math

from basisc import post
from basisc.drivers import DriverConfig, match_indices, run_driver

for n in (3, 4, 5):
    k = post.grover_iterations(n, 1)
    r = run_driver("grover", DriverConfig(bindings={"N": n}, shots=500, seed=2))
    hits = r.details["counts"].get("1" * n, 0)
    print(f"N={n}: {k} iterations, hit rate {hits / 500:.3f}, "
          f"predicted {post.grover_success(n, 1, k):.3f}")

print()
r = run_driver("fixpoint", DriverConfig(bindings={"N": 3}, shots=500, phases=[math.pi] * 4))
print("fixed-point search with an all-pi schedule:", r.answer,
      dict(sorted(r.details["counts"].items())))

print()
hay, pat = "01101101", "11"
want = match_indices(hay, pat)
r = run_driver("match", DriverConfig(bindings={"M": len(want)}, args={"hay": hay, "pat": pat},
                                     shots=400))
print(f"'{pat}' in cyclic '{hay}': found offsets {r.answer}, expected {want}")
