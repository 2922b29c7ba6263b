"""
Checking sufficient scatteredness
=================================

A coefficient matrix is sufficiently scattered when the cone spanned by its
rows contains the second-order cone and touches its boundary only along the
axes. For three components the check is exact. For more we sample.
"""
import numpy as np

from volnmf import datagen, geometry
from volnmf.errors import SSCConstructionFailed

# %%
# The block used by the synthetic generator. Each row is a shifted axis
# vector. Small shifts keep the rows spread out.
def shifted_axes(beta):
    return np.array([(1 - beta) * np.eye(3)[i] + beta * np.eye(3)[j]
                     for i in range(3) for j in range(3) if i != j])


for beta in (0.1, 0.3, 1 / 3, 0.4):
    rep = geometry.ssc_check_exact_k3(shifted_axes(beta))
    print("beta=%.3f  ssc1=%s  ssc2=%s" % (beta, rep.ssc1.name, rep.ssc2.name))

# %%
# At beta = 1/3 the cone just touches the second-order cone off the axes, so
# the first condition holds but the second fails. Past that the first fails
# and the report carries a violating direction. The generator refuses such
# blocks.
rep = geometry.ssc_check_exact_k3(shifted_axes(0.4))
print("certificate:", np.round(rep.certificate, 4))
try:
    datagen.build_ssc_basis_block(beta=0.4)
except SSCConstructionFailed as exc:
    print("generator:", exc)

# %%
# Pairwise sums of axis vectors are not scattered enough either.
pairs = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]])
print("pairwise sums:", geometry.ssc_check_exact_k3(pairs).ssc1.name)

# %%
# The sampling check works for any rank. The identity in four dimensions is
# the textbook example that holds.
print("I4 sampled:", geometry.ssc_check_sampling(np.eye(4), n_samples=2000).ssc1.name)
