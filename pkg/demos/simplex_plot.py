"""
Drawing the estimated simplex
=============================

Data columns, the true basis, and an estimate are all mapped to barycentric
coordinates relative to the truth and drawn inside a triangle. The dashed
triangle is the estimate.
"""
import sys
from pathlib import Path

from volnmf import datagen, metrics, plotting, solver

ds = datagen.generate_synthetic(datagen.SyntheticSpec(setting="three-dense-rows", j=300))
res = solver.solve_mav(ds.x, solver.SolverConfig(k=3, lambda_prime=0.01))

svg, coords = plotting.plot_simplex(res.m, m_true=ds.m_true, x=ds.x)
print("data points inside the true triangle:", int((coords >= -1e-9).all(axis=0).sum()), "of", coords.shape[1])

# %%
# Vertices of the estimate, expressed in the true basis. A perfect estimate
# would give a permuted identity.
al = metrics.align_basis(res.m, ds.m_true)
print(plotting.barycentric(al.apply(res.m), ds.m_true).round(3))

out = Path(sys.argv[1] if len(sys.argv) > 1 else "simplex.svg")
out.write_text(svg)
print("wrote", out)
