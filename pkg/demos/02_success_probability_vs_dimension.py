# # Success probability across dimensions
#
# The flag measurement succeeds with probability N * b0^2 for any channel.
# Compare the simulated projection with that formula on random channels.

import numpy as np

from resumable_teleport import ChannelSpec, InputState, alice_pipeline, flag_probabilities, prepare_total

rng = np.random.default_rng(0)

print(f"{'N':>3} {'b0^2':>10} {'N*b0^2':>10} {'simulated':>10} {'|diff|':>9}")
for n in range(2, 9):
    ch = ChannelSpec.random(n, rng)
    x = InputState.random(n, rng)
    p, _ = flag_probabilities(alice_pipeline(prepare_total(x, ch), ch))
    print(f"{n:>3} {ch.b0**2:>10.6f} {n * ch.b0**2:>10.6f} {p:>10.6f} {abs(p - n * ch.b0**2):>9.1e}")

# ## The uniform-remainder family
# b0^2 = x with the remaining weight spread evenly; p grows linearly in x up to 1 at x = 1/N.

n = 5
for x in np.linspace(0, 1 / n, 5):
    ch = ChannelSpec.from_b0_squared(n, x)
    p, _ = flag_probabilities(alice_pipeline(prepare_total(InputState.random(n, rng), ch), ch))
    print(f"b0^2 = {x:.3f} -> p = {p:.4f}")
