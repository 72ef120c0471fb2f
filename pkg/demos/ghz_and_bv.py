"""Entanglement and a one-query secret.

First we sample a GHZ state; only the all-zeros and all-ones strings
appear. Then Bernstein-Vazirani recovers a hidden string with one call
to the oracle per shot.
"""

from basisc.drivers import DriverConfig, Kernel, corpus_source, run_driver

ghz = Kernel(corpus_source("ghz"), "ghz", {"N": 4})
hist = ghz.histogram(1000, seed=1)
print("GHZ on 4 qubits:", dict(sorted(hist.counts.items())))

print()
for secret in ("1101", "00110", "1"):
    r = run_driver("bv", DriverConfig(args={"s": secret}, shots=64))
    print(f"secret {secret:>6}: recovered {r.answer:>6} "
          f"with {r.oracle_calls} oracle calls over {r.invocations} shots")
