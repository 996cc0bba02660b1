"""Replay an irregular command trace instead of a preconstructed profile.

Operator-style commands arrive as a CSV of timestamped desired positions
and velocities; the environment interpolates between samples. Here a
synthetic wandering trace stands in for recorded commands, and the
feedback controller tracks it.
"""
import numpy as np

from wiplab import Config, LqrController, WipEnv, load_trace, rollout

rng = np.random.default_rng(4)

# synthesize a 20 s trace at 50 Hz: smoothed random-walk velocity commands
t = np.arange(0.0, 20.0, 0.02)
vel = np.convolve(rng.normal(0, 0.4, t.size), np.ones(120) / 120, mode="same")
pos = np.cumsum(vel) * 0.02
with open("demo07_trace.csv", "w") as fh:
    fh.write("t,x_des,xdot_des\n")
    for row in zip(t, pos, vel):
        fh.write(",".join(repr(float(v)) for v in row) + "\n")

profile = load_trace("demo07_trace.csv")
print(f"loaded trace: {profile.trace_t.size} samples over {profile.duration:.1f} s")

cfg = Config()
env = WipEnv(cfg.plant(), profile=profile, horizon_steps=10_000,
             reward_cfg=cfg.reward_config())
metrics = rollout(LqrController(cfg.lqr_gains()), env, rng)
print(f"position rmse: {metrics.rmse_pos:.4f} m")
print(f"velocity rmse: {metrics.rmse_vel:.4f} m/s")
print(f"pitch rmse:    {metrics.rmse_pitch:.4f} rad")
print(f"failed: {metrics.failed}")
