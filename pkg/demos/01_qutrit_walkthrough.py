# # Qutrit walkthrough
#
# Teleport a random qutrit through a partially entangled channel and look at
# every intermediate state Alice produces.

import numpy as np

from resumable_teleport import ChannelSpec, InputState, outcome_distribution, run_attempt
from resumable_teleport.protocol import alice_stages, prepare_total

np.set_printoptions(precision=4, suppress=True)

# ## Channel and payload
# b0^2 = 1/6, so the attempt should succeed half of the time.

channel = ChannelSpec.from_coefficients([1 / np.sqrt(6), 1 / np.sqrt(3), 1 / np.sqrt(2)])
payload = InputState.random(3, rng=2026)
print(channel)
print("payload:", payload.amplitudes)

# ## Alice's gate sequence

stages = alice_stages(prepare_total(payload, channel), channel)
for name, s in stages.items():
    print(f"{name:>11}: norm {s.norm:.12f}, ancilla marginal {[round(p, 6) for _, p in outcome_distribution(s, 0)]}")

# The ancilla of |Delta> only reads 0 (success) or 1 (failure):

delta = stages["delta"]
print("P(flag=0) =", outcome_distribution(delta, 0)[0][1], " expected", 3 * channel.b0**2)

# ## A few sampled attempts

for seed in range(6):
    t = run_attempt(payload, channel, seed)
    if t.succeeded:
        s = t.success
        print(f"seed {seed}: success, message (n, m) = {s.classical_message}, fidelity {s.fidelity:.12f}")
    else:
        f = t.failure
        print(f"seed {seed}: failure on channel digit j={f.j}, recovered fidelity {f.fidelity:.12f}")
