"""
Time allocation of households
=============================

Eighteen activity categories observed for thirty household types. After
normalizing each column to sum to one, a rank-three factorization splits the
columns into typical time-use profiles.
"""
import numpy as np

from volnmf import datagen, metrics, reproduce, solver

ds = datagen.load_time_allocation()
x = datagen.normalize_columns(ds.x)
print("X shape:", x.shape)

# %%
# Minimum-volume fits find a compact basis. The maximum-volume variant
# instead pushes the coefficient vectors apart, which tends to give a sparser
# basis and denser coefficients.
fits = {}
for name, solve, lp in (("mvc", solver.solve_mvc, 0.001), ("mav", solver.solve_mav, 0.003)):
    res = solver.best_of_restarts(solve, x, solver.SolverConfig(k=3, lambda_prime=lp), restarts=5)
    fits[name] = res
    print(
        "%s: logdet %.3f, zeros in M %d, zeros in H %d"
        % (name, metrics.volume_logdet(res.m), metrics.sparsity_count(res.m), metrics.sparsity_count(res.h))
    )

# %%
# Print the strongest activities in each basis column of the MAV fit, lined
# up with the MVC columns.
m, _ = reproduce.order_like(fits["mav"].m, fits["mav"].h, fits["mvc"].m)
for q in range(3):
    top = np.argsort(m[:, q])[::-1][:3]
    print("profile %d:" % q, ", ".join("%s %.3f" % (ds.row_labels[i], m[i, q]) for i in top))
