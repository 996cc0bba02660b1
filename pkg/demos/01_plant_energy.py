"""Open-loop plant behavior: instability, energy conservation, integrator order.

The upright equilibrium is unstable, so a small tilt swings the body into
large oscillations. With friction off and no torque the integrator must
conserve total mechanical energy; halving the step should shrink the
global error 16-fold (classical 4th-order Runge-Kutta).
"""
import numpy as np
import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from wiplab import WipParams, simulate, total_energy

params = WipParams(friction_coeff=0.0)
dt = 0.0005
traj = simulate(params, np.array([0.0, 0.1, 0.0, 0.0]), lambda t, q: 0.0, dt, 4000)
t = np.arange(traj.shape[0]) * dt

energy = np.array([total_energy(params, q) for q in traj])
drift = np.abs(energy - energy[0]) / abs(energy[0])
print(f"max relative energy drift over {t[-1]:.1f} s: {drift.max():.2e}")

# integrator order: error vs a much finer reference over half a second
ref = simulate(params, np.array([0.0, 0.1, 0.0, 0.0]), lambda t, q: 0.0, 0.00025, 2000)[-1]
errs = {}
for h in (0.002, 0.001):
    end = simulate(params, np.array([0.0, 0.1, 0.0, 0.0]), lambda t, q: 0.0,
                   h, int(0.5 / h))[-1]
    errs[h] = np.linalg.norm(end - ref)
print(f"error(dt=0.002) / error(dt=0.001) = {errs[0.002] / errs[0.001]:.2f} "
      "(expect about 16)")

fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
ax1.plot(t, traj[:, 1])
ax1.set_ylabel("pitch (rad)")
ax1.set_title("open-loop swing from a 0.1 rad tilt")
ax2.semilogy(t, np.maximum(drift, 1e-18))
ax2.set_ylabel("relative energy drift")
ax2.set_xlabel("time (s)")
fig.tight_layout()
fig.savefig("demo01_energy.png", dpi=120)
print("wrote demo01_energy.png")
