"""Decay of ||T_k^* T_j|| for dyadic pieces of a convolution operator.

Each piece T_j convolves with 2^j varsigma(2^j .).  When varsigma has mean
zero the pieces are almost orthogonal: the norms decay like 2^{-eps|j-k|}
and the Cotlar-Stein lemma sums them.  Without cancellation they do not.
"""
import numpy as np

from mpradon.dilations import DilationScheme
from mpradon.kernels import Bump1D, BumpSpec
from mpradon.opnorm import Cutoff, GridSpec, ao_decay_fit, cotlar_bound, discretize_piece, fit_decay, fourier_table_1d

grid = GridSpec.cube(1, 1.0, 256)
cut = Cutoff.for_grid(grid, 0.75)


def pieces(bump, jmax=5):
    spec = BumpSpec.separable([bump])
    return {j: discretize_piece(lambda t, x: x - t, spec, (j,), DilationScheme.isotropic(1), grid, cut, cut)
            for j in range(jmax + 1)}


for label, bump in [("mean zero", Bump1D("dmollifier", order=1, radius=0.25)),
                    ("no cancellation", Bump1D("mollifier", radius=0.25).normalized())]:
    fit = ao_decay_fit(pieces(bump), both=False)
    print("%-16s slope %.3f  R^2 %.3f  Cotlar-Stein sum %.3f" % (label, fit.slope, fit.r2, cotlar_bound(fit.table)))

orc = fourier_table_1d(BumpSpec.separable([Bump1D("dmollifier", order=1, radius=0.25)]), range(6),
                       xi_max=np.pi / grid.h[0])
print("Fourier oracle slope %.3f" % fit_decay(orc)[0])
