# Copyright 2026 The biglearn Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Independent oracle for tailored-surface local minima.

The tailored model and target share the x2 factor N(0, s2), so the joint
reverse KL equals the reverse KL of the x1 marginals. That 1-D integral is
evaluated by brute-force midpoint quadrature in numpy.
"""
import sys
import numpy as np
from scipy.special import logsumexp


def kl_x1(mu1, mu2, var, n=2001):
    mus = np.array([mu1, mu2, -1.0, 1.0])
    sd = np.sqrt(var)
    lo, hi = mus.min() - 8 * sd, mus.max() + 8 * sd
    h = (hi - lo) / n
    x = lo + h * (np.arange(n) + 0.5)
    def logmix(a, b):
        la = -0.5 * (x - a) ** 2 / var
        lb = -0.5 * (x - b) ** 2 / var
        return np.logaddexp(la, lb) + np.log(0.5) - 0.5 * np.log(2 * np.pi * var)
    lp, lq = logmix(mu1, mu2), logmix(-1.0, 1.0)
    p = np.exp(lp)
    return float(np.sum(p * (lp - lq)) * h)


def surface(var, npts=151):
    ax = -3 + 6 * np.arange(npts) / (npts - 1)
    return ax, np.array([[kl_x1(a, b, var) for b in ax] for a in ax])


def minima(ax, z, tol=1e-9):
    out = []
    gmin = z.min()
    for i in range(1, len(ax) - 1):
        for j in range(1, len(ax) - 1):
            nb = z[i - 1:i + 2, j - 1:j + 2].copy()
            nb[1, 1] = np.inf
            if z[i, j] < nb.min():
                out.append((ax[i], ax[j], z[i, j], z[i, j] <= gmin + tol))
    return out


if __name__ == "__main__":
    for sigma2, noises in ((0.1, [0.0]), (0.02, [0.0, 0.1, 0.3, 1.0])):
        for v in noises:
            ax, z = surface(sigma2 + v)
            m = minima(ax, z)
            ng = sum(1 for e in m if not e[3])
            print(f"sigma2={sigma2} noise={v}: {len(m)} minima, non-global={ng}")
            for e in m:
                print("   ", e)
