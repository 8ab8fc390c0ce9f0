"""
Rearrangements on the grid
==========================

Values of a field are redistributed so that the largest sit at the centre, or
at the edges. The pairing of the linearised-harvest profile with such
rearrangements bounds every other arrangement.
"""
# %%

import numpy as np

from refugelab.config import DEFAULT_PARAMS
from refugelab.core import Grid, ModelParams
from refugelab.rearrange import (corollary_check, hardy_littlewood_check, polya_szego_deficit,
                                 schwarz_decreasing, schwarz_increasing)

f = np.array([4.0, 1.0, 3.0, 2.0])
print("f         ", f)
print("decreasing", schwarz_decreasing(f))
print("increasing", schwarz_increasing(f))

# %%
# Rearranging two fields the same way can only increase their pairing, and
# centring a nonnegative profile can only lower its gradient energy.

rng = np.random.default_rng(0)
a, b = rng.random(9), rng.random(9)
print("pairings", hardy_littlewood_check(a, b))
print("energy deficit", polya_szego_deficit(a))

# %%
# With a symmetric refuge that decreases away from the centre, the profile
# phi_R increases away from it. Over all 720 orderings of six infection
# values, the extremes are the two rearrangements.

p = ModelParams(**DEFAULT_PARAMS)
rep = corollary_check(np.array([0.2, 0.6, 0.9, 0.9, 0.6, 0.2]), rng.random(6), Grid(1.0, 6), p)
print(rep.summary())
