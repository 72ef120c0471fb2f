"""Factoring small numbers by order finding.

The kernel estimates a phase k/r where r is the order of x mod n. A
continued-fraction expansion recovers r, and gcd(x^(r/2) +- 1, n) then
splits n.
"""

from fractions import Fraction

from basisc import post
from basisc.drivers import DriverConfig, order_precision, run_driver

# the post-processing on its own: reading 0.0110 as a phase
phase = post.as_bin_frac("0110")
print("0.0110 ->", phase, "convergents", [str(c) for c in post.cfrac_convergents(phase)])
print("best with denominator below 15:",
      post.last_convergent_with_denominator_below(post.cfrac_convergents(Fraction(3, 8)), 15))
print()

for n, x in ((15, 7), (21, 2)):
    bits, t = order_precision(n)
    r = run_driver("order_finding", DriverConfig(bindings={"X": x, "N": n}))
    print(f"order of {x} mod {n}: {r.answer}  ({bits} work qubits, {t} phase qubits)")

print()
for n in (15, 21):
    r = run_driver("shors", DriverConfig(bindings={"N": n}, seed=4))
    f = int(r.answer)
    print(f"{n} = {f} x {n // f}")
