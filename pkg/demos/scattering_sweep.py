"""Reflection off a lossy half-line, across frequency.

Send a steady wave from the transparent side onto a half-line of Debye
material.  Whatever is not reflected at the interface is eventually
absorbed — the transmitted wave decays at rate 2 Im k inside the
material — so the budget is two-way: |r|^2 comes back, 1 - |r|^2 is
handed to the material, over a penetration depth 1/(2 Im k).  The sweep
draws both and cross-checks the spatial dissipation profile against the
net flux entering the absorber.

Writes scattering_sweep.csv and scattering_sweep.png into demos/out/.
"""

import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tddstring import DebyeSusceptibility, scatter_half_line

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

GAMMA = 1.0
omegas = np.linspace(0.05, 12.0, 400)
amplitudes = (0.25, 1.0, 4.0)

# --- sweep ----------------------------------------------------------------

absorbed = {}   # amplitude -> 1 - |r|^2
depth = {}      # amplitude -> 1 / (2 Im k_greater)
worst_budget = 0.0
for alpha in amplitudes:
    model = DebyeSusceptibility(amplitude=alpha, rate=1.0)
    frac = np.empty_like(omegas)
    pen = np.empty_like(omegas)
    for i, omega in enumerate(omegas):
        sol = scatter_half_line(omega, model, GAMMA)
        frac[i] = 1.0 - abs(sol.r) ** 2
        pen[i] = 1.0 / (2.0 * sol.k_greater.imag)
        # quadrature over the dissipation profile vs the closed-form total
        x_deep = np.linspace(0.0, 40.0 * pen[i], 4001)
        q = np.trapezoid(sol.dissipation_density(x_deep), x_deep)
        worst_budget = max(worst_budget, abs(q / sol.total_dissipation - 1.0))
    absorbed[alpha] = frac
    depth[alpha] = pen

print(f"worst |integrated dissipation / entering flux - 1|: {worst_budget:.3e}")

# --- outputs --------------------------------------------------------------

csv_path = os.path.join(OUT, "scattering_sweep.csv")
with open(csv_path, "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["omega"]
                    + [f"absorbed_a{a:g}" for a in amplitudes]
                    + [f"depth_a{a:g}" for a in amplitudes])
    for i, omega in enumerate(omegas):
        row = [omega] + [absorbed[a][i] for a in amplitudes] \
                      + [depth[a][i] for a in amplitudes]
        writer.writerow([f"{v:.8e}" for v in row])
print(f"wrote {csv_path}")

fig, (ax_frac, ax_depth) = plt.subplots(1, 2, figsize=(10, 3.8))
for alpha in amplitudes:
    ax_frac.plot(omegas, absorbed[alpha], label=f"amplitude {alpha:g}")
    ax_depth.semilogy(omegas, depth[alpha], label=f"amplitude {alpha:g}")
ax_frac.set_xlabel("omega")
ax_frac.set_ylabel("absorbed fraction  1 - |r|^2")
ax_frac.set_ylim(0, 1.05)
ax_frac.legend(fontsize=8)
ax_depth.set_xlabel("omega")
ax_depth.set_ylabel("penetration depth  1 / (2 Im k)")
ax_depth.legend(fontsize=8)
fig.tight_layout()
png_path = os.path.join(OUT, "scattering_sweep.png")
fig.savefig(png_path, dpi=150)
print(f"wrote {png_path}")
