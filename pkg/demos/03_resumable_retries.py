# # Retrying after failure
#
# A failed attempt leaves the exact payload with Alice, so she can try again
# over a fresh channel. The number of attempts is geometric with mean 1/p.

import numpy as np

from resumable_teleport import ChannelSpec, InputState, fidelity, monte_carlo, run_resumable

channel = ChannelSpec.from_b0_squared(3, 0.1)  # p = 0.3
payload = InputState.random(3, rng=1)

stats, final = run_resumable(payload, channel, max_attempts=50, seed=10)
print(f"one run: {stats.attempts} attempts, delivered={final.succeeded}, "
      f"fidelity {fidelity(final.success.bob_final, payload.state()):.12f}")

# ## Many runs

agg = monte_carlo(payload, channel, runs=2000, seed=0, max_attempts=200)
print(f"runs={agg.runs} attempts={agg.attempts} per-attempt success={agg.empirical_success_rate:.4f} (analytic 0.3)")
print(f"mean attempts to success {agg.mean_attempts_to_success:.3f} (analytic {1 / 0.3:.3f})")
print(f"worst delivered fidelity {agg.min_fidelity_success:.12f}, worst recovered {agg.min_fidelity_recovery:.12f}")

# ## A channel that never works
# With b0 = 0 every attempt fails, yet the payload survives all of them.

dead = ChannelSpec.from_coefficients([0, 1, 1])
stats, final = run_resumable(payload, dead, max_attempts=5, seed=0)
print(f"b0=0: {stats.successes} successes in {stats.attempts} attempts, "
      f"payload fidelity {final.failure.fidelity:.12f}")
