"""Undoing amplitude damping on a single copy, with post-selection.

The inverse of the damping channel is Hermitian preserving but not CP, so it
cannot be applied directly.  Exponentiating it inside a controlled circuit and
post-selecting the ancilla projects the noisy state back to |+>.
"""

import numpy as np

from hme import apps
from hme import linalg as la
from hme import maps as mp

gamma = 0.2
psi = la.pure(np.array([1, 1]) / np.sqrt(2))
noise = mp.amplitude_damping(gamma)
noisy = mp.apply_map(noise, psi)
print("noisy state:\n", np.round(noisy, 4))

for channel in ("ideal", "hme"):
    r = apps.recover_state(noise, noisy, noisy, eps=0.05, channel=channel, target=psi)
    print(f"{channel:5s} success prob {r.success_prob:.4f}  "
          f"distance to |+> {r.trace_dist_to_target:.2e}")

r = apps.recover_state(noise, noisy, noisy, rng=np.random.default_rng(1),
                       mode="sampled", target=psi, trials=10_000)
print(f"sampled: empirical rate {r.empirical_rate:.4f} over 10^4 trials")
