"""Anatomy of the hidden-string coupling.

The coupling function that ties the visible string to its hidden
strings is the square-root-of-friction transform of the material model:
a delta spike at the attachment point plus a smooth remainder with an
algebraic 1/s^2 tail.  Build it for a Debye material, look at both
pieces, and close the loop: reconstruct the relaxation kernel from the
coupling and compare with the exponential we started from — once on a
generous hidden domain, once truncated, to show the price of the tail.

Writes coupling_audit.png into demos/out/.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tddstring import (
    ConstantSusceptibility,
    DebyeSusceptibility,
    build_coupling,
    reconstruct_chi,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

debye = DebyeSusceptibility(amplitude=0.5, rate=1.0)
coupling = build_coupling(debye)

# --- the two pieces -------------------------------------------------------

print(f"delta weight c0 = {coupling.delta_weight:.6f}")
const = build_coupling(ConstantSusceptibility(amplitude=0.5))
print(f"constant model for comparison: c0 = {const.delta_weight:.6f} "
      f"= sqrt(2*0.5), regular part max |.| = "
      f"{np.max(np.abs(const.regular_at(np.linspace(0, 50, 500)))):.1e}")

# the square root of the friction spectrum has a |sigma| kink at the
# origin with slope sqrt(2*amplitude)/rate, and that kink is what puts
# the 1/s^2 tail on the cosine transform
s = np.linspace(0.05, 60.0, 2400)
reg = coupling.regular_at(s)
tail_coef = np.sqrt(2.0 * debye.amplitude) / debye.rate / np.pi
tail = -tail_coef / s**2
print(f"regular part at s=40: {coupling.regular_at(40.0):.4e}  "
      f"(kink tail -{tail_coef:.4f}/s^2: {-tail_coef / 40.0**2:.4e})")

# --- round trip, full vs truncated hidden domain -------------------------

tau = np.linspace(0.0, 15.0, 1501)
target = 0.5 * np.exp(-tau)
errs = {}
for half_width in (20.0, 80.0):
    # round trip as if the hidden domain stopped at half_width: zero the
    # regular part beyond it and reconstruct
    c = build_coupling(debye)
    mask = np.abs(c.s_grid) <= half_width
    c.regular[~mask] = 0.0
    errs[half_width] = np.abs(reconstruct_chi(c, tau) - target)
    print(f"round-trip max |error| with hidden domain |s| <= {half_width:g}: "
          f"{errs[half_width].max():.3e}")

# --- figure ---------------------------------------------------------------

fig, (ax_reg, ax_rt) = plt.subplots(1, 2, figsize=(10, 3.8))

ax_reg.semilogy(s, np.abs(reg), label="|regular part|")
ax_reg.semilogy(s, np.abs(tail), "k--", lw=0.8, label="kink tail coef/s^2")
ax_reg.set_xlabel("s")
ax_reg.set_title(f"coupling: delta {coupling.delta_weight:.3f} + smooth tail")
ax_reg.legend(fontsize=8)

for half_width, err in errs.items():
    ax_rt.semilogy(tau, np.maximum(err, 1e-17), label=f"|s| <= {half_width:g}")
ax_rt.set_xlabel("tau")
ax_rt.set_ylabel("|reconstructed - 0.5 exp(-tau)|")
ax_rt.set_title("kernel round trip vs hidden-domain size")
ax_rt.legend(fontsize=8)

fig.tight_layout()
path = os.path.join(OUT, "coupling_audit.png")
fig.savefig(path, dpi=150)
print(f"wrote {path}")
