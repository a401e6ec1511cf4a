# %% [markdown]
# # Free boundaries, inclusions and blow-ups
#
# The half-space pair with eps > 0 separates the two free boundaries: the
# coupled free boundary is empty and inclusion (c) fails, which is the
# point of the example.  The uncoupled pair has a whole line of free
# boundary points of v where u stays positive; every one of them blows up
# to the quadratic form y^2/2.

# %%
import numpy as np

from freebound import check_inclusions, classify_blowup, example_halfspace, example_uncoupled, uncoupled_set
from freebound.grid import unit_box

grid = unit_box(2, 1 / 128)
sharp = example_halfspace(1.0, 0.25)
u, v, f, g = sharp.fields(grid)
for line in check_inclusions(u, v).lines(sharp.expected):
    print(line)

# %%
u, v, f, g = example_uncoupled().fields(grid)
cells = uncoupled_set(u, v).centers
print(len(cells), "uncoupled cells")
for p in cells[np.linspace(0, len(cells) - 1, 6).round().astype(int)]:
    print(classify_blowup(v, p, (0.2, 0.1, 0.05)).line())

# %%
u, v, f, g = example_halfspace(0.0, 0.0).fields(grid)
for p in [(0.0, -0.5), (0.0, 0.0), (0.0, 0.5)]:
    print(classify_blowup(v, p, (0.2, 0.1, 0.05)).line())
