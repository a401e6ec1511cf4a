# %% [markdown]
# # Closed-form pairs as oracles
#
# Each example pair carries its data and the region where each equation
# holds.  The discrete residuals should shrink like h^2 on those regions.

# %%
import numpy as np

from freebound import example_halfspace, example_radial, example_uncoupled, verify_example
from freebound.exact import RADIAL_COEFF
from freebound.grid import intrinsic_norm, unit_box

print("radial coefficient", RADIAL_COEFF, "check:", RADIAL_COEFF**3 * 64 / 81)

# %%
for pair in (example_radial(), example_uncoupled(), example_halfspace(1.0, 0.25)):
    report = verify_example(pair, unit_box(2, 1 / 64))
    for line in report.lines():
        print(line)

# %% [markdown]
# Growth exponents at the origin of the radial pair: 4/3 for u, 2 for v
# and 2/3 for the intrinsic combination u^(1/2) + v^(1/3).

# %%
from freebound.analysis import dyadic_radii, growth_exponent

grid = unit_box(2, 1 / 128)
u, v, f, g = example_radial().fields(grid)
radii = dyadic_radii(grid.h)
for name, field in (("u", u), ("v", v), ("intrinsic", intrinsic_norm(u, v))):
    print(growth_exponent(field, (0.0, 0.0), radii).line(name + " "))

# %%
print("radii", np.round(radii, 4))
