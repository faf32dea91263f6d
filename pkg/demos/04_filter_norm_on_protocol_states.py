# # The discrimination filter
#
# The controlled filter uses real block weights (b0/b_y, sqrt(1 - (b0/b_y)^2)),
# which makes it non-unitary as a matrix. On the states the protocol actually
# feeds it, the norm is nevertheless preserved.

import numpy as np

from resumable_teleport import ChannelSpec, InputState, apply, filter_d21
from resumable_teleport.core import random_state
from resumable_teleport.protocol import alice_stages, prepare_total

rng = np.random.default_rng(3)

for n in (2, 3, 5):
    ch = ChannelSpec.random(n, rng)
    d = filter_d21(ch)
    omega = alice_stages(prepare_total(InputState.random(n, rng), ch), ch)["omega"]
    protocol_norm = apply(d, [2, 1], omega).norm
    generic_norm = apply(d, [0, 1], random_state(n, 2, rng)).norm
    print(f"N={n}: max|DD^+ - I| = {d.unitarity_deviation():.3f}, "
          f"norm after D on protocol state {protocol_norm:.12f}, on a random state {generic_norm:.4f}")
