"""
Value-function surrogates for a nonlinear PDE
=============================================

For the Allen-Cahn equation the state-dependent Riccati approach freezes the
nonlinearity at each state ``y``: ``A(y) = sigma L + diag(1 - y^2)``.  Solving
the Riccati equation for ``A(y)`` gives ``y^T P(y) y``, a surrogate value
with an explicit gradient.

The surrogate inherits the banded coupling of the Laplacian, so an S-NN over
the sequential graph can learn it.  We generate samples and fit one.
"""

from sepsense.experiments import DataSplit, sdre_dataset
from sepsense.graph import sequential_graph
from sepsense.models import allen_cahn
from sepsense.snn import Dataset, TrainConfig, build_snn, mse, train

n = 16
prob = allen_cahn(n, sigma=1e-2, delta1=10.0, delta2=0.1)
data = sdre_dataset(prob, 3000, radius=1.0, seed=0)
print(f"{len(data.values)} samples, {len(data.failures)} Riccati failures")

# %%
# Split in order into training, validation and test sets.
parts = [slice(0, 2000), slice(2000, 2500), slice(2500, 3000)]
split = DataSplit(*[Dataset(data.points[s], data.values[s], data.gradients[s], "ball", 1.0)
                    for s in parts])

# %%
# The values are small (the costs carry a 1/n factor), so the stopping
# tolerance is set relative to their spread.
var = split.train.values.var()
model = build_snn(sequential_graph(n), l=3, M=8, seed=0)
report = train(model, split.train, split.val,
               TrainConfig(nu_g=0.5, nu_z=0.5, tolerance=1e-2 * var, max_epochs=300, seed=0))
err = mse(model, split.test)
print(f"{report.epochs} epochs ({report.stop_reason}), test MSE {err:.2e}, "
      f"relative to variance {err / split.test.values.var():.2e}")
