#!/usr/bin/env python3
"""Designing the FA/MD-optimal correlator for a two-level optical pulse.

Walks through the benchmark scenario (P = 10, N0/q_e^2 = 1e-4, rate levels
1 and 10 over each half of the horizon, unit-gain photodiode):

1. design the optimal correlator at a single threshold and look at its shape,
2. compare its MD exponent with the optical matched correlator's,
3. sweep the threshold and write the exponent trade-off curve to CSV.

Run from the repository root:  python3 demos/01_detection_tradeoff.py
Outputs land in demos/out/.
"""

import pathlib

import numpy as np

import optcorr as oc

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

grid = oc.Grid(T=1.0, n=4096)
rate = oc.two_level_rate(1.0, 10.0, grid)
gain = oc.GainModel.deterministic()
cfg = oc.ReceiverConfig(N0=1e-4, q_e=1.0, P=10.0, T=1.0)

print("== single-threshold design ==")
theta = 8.0
design = oc.design_detector(theta, rate, gain, cfg)
levels = np.unique(np.round(design.w_star.values, 10))
print(f"theta = {theta}")
print(f"optimal correlator levels: {levels}")
print(f"level identity w^2 + w'^2 = {levels[0]**2 + levels[1]**2:.6f} (2P = 20)")
print(f"E_FA = {design.E_FA:.6g}   E_MD = {design.E_MD:.6g}")
print(f"s* = {design.s_star:.6g}   c* = {design.c_star:.6g}")

womf = oc.omf_correlator(rate, gain, cfg)
e_omf, _ = oc.md_exponent_for_correlator(womf, theta, rate, gain, cfg)
print(f"optical matched correlator E_MD = {e_omf:.6g}"
      f"  (optimal wins by {design.E_MD - e_omf:.4g})")

# the matched correlator (w proportional to the rate) is also beaten
w_matched = oc.normalize_power(rate.waveform, cfg.P, cfg.T)
e_matched, _ = oc.md_exponent_for_correlator(w_matched, theta, rate, gain, cfg)
print(f"classical matched correlator E_MD = {e_matched:.6g}")

print("\n== threshold sweep ==")
theta_end = grid.dt * float(rate.values @ womf.values)   # OMF exponent dies here
thetas = np.linspace(0.0, theta_end, 21)
curve = oc.exponent_tradeoff_curve(thetas, [("omf", womf)], rate, gain, cfg)
path = OUT / "two_level_tradeoff.csv"
path.write_text(oc.curve_to_csv(curve), encoding="utf-8")
print(f"wrote {path}")
print("theta      E_FA        E_MD_opt    E_MD_omf")
for i in range(0, thetas.size, 4):
    print(f"{curve.theta[i]:8.3f} {curve.e_fa[i]:11.4g} "
          f"{curve.e_md['optimal'][i]:11.4g} {curve.e_md['omf'][i]:11.4g}")
print("\nThe gap widens dramatically in relative terms as theta grows: the")
print("OMF exponent dies at theta = %.3f while the optimal design still" % theta_end)
print("delivers E_MD = %.4g there." % curve.e_md["optimal"][-1])
