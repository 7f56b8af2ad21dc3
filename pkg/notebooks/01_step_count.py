"""How many HME steps does a target accuracy need?

We exponentiate the identity map (whose Hamiltonian is the swap) against a
random qubit state and watch the diamond distance to the exact unitary fall
as 1/K.  The generic schedule is then compared with what was actually needed.
"""

import numpy as np

from hme import engine as en
from hme import linalg as la
from hme import maps as mp
from hme import metrics as me

rng = np.random.default_rng(7)
rho = la.random_density(2, rng)
h = mp.hamiltonian_of(mp.identity(2))
t = np.pi

exact = en.ideal_channel(mp.identity(2), rho, t)
print(f"{'K':>6} {'diamond (lower)':>16} {'K * distance':>14}")
for K in (16, 64, 256, 1024):
    q = en.hme_channel(rho, en.HMESchedule(h, t, K))
    d = me.diamond_distance(q, exact, restarts=4, rng=rng).lower
    print(f"{K:6d} {d:16.5f} {K * d:14.3f}")

# The product K * distance settles to a constant, so halving the error costs
# twice the copies.  The generic schedule is conservative by a wide margin.
sched = en.schedule_for(h, t, 0.1)
q = en.hme_channel(rho, sched)
print(f"\nschedule_for(eps=0.1) picks K = {sched.K}; achieved distance "
      f"{me.diamond_distance(q, exact, restarts=4, rng=rng).lower:.4f}")
