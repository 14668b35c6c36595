"""Steady modes of the absorbing string, three ways.

Build the causal mode (decaying into the material, the one a physical
source excites), its anticausal mirror, and a free plane wave, all at
the same frequency in the same Debye material.  For the causal mode,
check pointwise that the energy flux loses exactly what the local
dissipation eats; for the plane wave, evaluate the hidden-string stress
by the smearing-ladder extrapolation and compare it with the closed
form.

Writes mode_gallery.png into demos/out/.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from tddstring import (
    DebyeSusceptibility,
    build_coupling,
    causal_wavenumber,
    mode_flux_and_dissipation,
    plane_wave,
    plane_wave_stress_regularized,
    spectral_mode,
)

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

OMEGA = 1.0
GAMMA = 1.0
debye = DebyeSusceptibility(amplitude=1.0, rate=1.0)
x = np.linspace(0.0, 10.0, 2001)

# --- causal / anticausal mode pair ---------------------------------------

k = causal_wavenumber(debye, OMEGA, GAMMA)
print(f"causal wavenumber at omega={OMEGA:g}: {k:.6f} (decay rate {k.imag:.4f})")

# boundary seeds the first two nodes of the marching recurrence; the
# anticausal mirror is the conjugate mode exp(-i conj(k) x)
modes = {}
for kind in ("causal", "anticausal"):
    wav = 1j * k if kind == "causal" else -1j * np.conj(k)
    bc = (np.exp(wav * x[0]), np.exp(wav * x[1]))
    modes[kind] = spectral_mode(OMEGA, debye, GAMMA, x, boundary=bc, kind=kind)

mirror_gap = np.max(np.abs(modes["anticausal"].phi - np.conj(modes["causal"].phi)))
print(f"anticausal mode == conj(causal mode) to {mirror_gap:.3e}")

flux, dissipation = mode_flux_and_dissipation(modes["causal"])
interior = slice(5, -5)
balance = np.max(np.abs(np.gradient(flux, x)[interior] + dissipation[interior]))
print(f"causal mode: max |dJ/dx + dissipation| = {balance:.3e}")
print(f"causal mode: min dissipation density   = {dissipation.min():.3e} (>= 0)")

# --- plane wave stress, regularized vs closed form -----------------------

coupling = build_coupling(debye)
pw = plane_wave(OMEGA, debye, GAMMA, mixing=0.5)
ext = plane_wave_stress_regularized(pw, coupling)
print(f"plane wave k={pw.k:.6f}, mixing {pw.mixing:g}")
print(f"hidden stress, ladder extrapolation: {ext.limit:.6e}")
print(f"hidden stress, closed form:          {pw.stress_hidden:.6e}")
print(f"visible + hidden = {pw.stress_visible + ext.limit:.6e} "
      f"(undamped-string value {pw.stress_total:.6e})")

# --- figure ---------------------------------------------------------------

fig, (ax_mode, ax_bal) = plt.subplots(1, 2, figsize=(10, 3.8))

ax_mode.plot(x, np.real(modes["causal"].phi), lw=1.0, label="Re phi")
ax_mode.plot(x, np.imag(modes["causal"].phi), lw=1.0, label="Im phi")
env = np.exp(-k.imag * x)
ax_mode.plot(x, env, "k:", lw=0.8, label="envelope exp(-Im k x)")
ax_mode.plot(x, -env, "k:", lw=0.8)
ax_mode.set_xlabel("x")
ax_mode.set_title(f"causal mode at omega={OMEGA:g} (mirror = conjugate)")
ax_mode.legend(fontsize=8)

ax_bal.plot(x, flux / flux[0], label="flux J(x) / J(0)")
ax_bal.plot(x, dissipation / flux[0], label="dissipation density / J(0)")
ax_bal.set_xlabel("x")
ax_bal.set_title("causal mode: flux pays for dissipation")
ax_bal.legend(fontsize=8)

fig.tight_layout()
path = os.path.join(OUT, "mode_gallery.png")
fig.savefig(path, dpi=150)
print(f"wrote {path}")
