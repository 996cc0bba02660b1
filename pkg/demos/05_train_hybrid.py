"""A short fused-controller training run at reduced scale.

Three ensemble members train for a handful of epochs on velocity-profile
tracking with the feedback controller holding the robot up throughout.
Watch the mixture variance: fresh heads give a wide ensemble, and the
updated members begin to sharpen within a few epochs. The full-scale run
is `wiplab train` (10 members, 50 epochs).
"""
import numpy as np

from wiplab import Config, Ensemble, EpochConfig, WipEnv, apply_case, case_by_name, train_epoch
from wiplab.cli import _init_sampler, _train_profile_factory
from wiplab.tasks import OBS_DIM

cfg = Config()
cfg.members = 3
cfg.epochs = 6

rng = np.random.default_rng(0)
gains = cfg.lqr_gains()
plant = apply_case(cfg.plant(), case_by_name(cfg.train_case))
env = WipEnv(plant, profile_factory=_train_profile_factory(cfg),
             init_sampler=_init_sampler(cfg.init_pitch, cfg.init_pitch_jitter),
             **cfg.env_kwargs())
ensemble = Ensemble.create(cfg.members, OBS_DIM, cfg.buffer_capacity, rng,
                           **cfg.sac_kwargs())
ep_cfg = EpochConfig(steps=cfg.steps_per_epoch, update_every=cfg.update_every,
                     residual_scale=cfg.residual_scale)

print(f"{cfg.members} members, {cfg.epochs} epochs x {ep_cfg.steps} steps, "
      f"updates every {ep_cfg.update_every} steps")
for epoch in range(1, cfg.epochs + 1):
    stats = train_epoch(ensemble, env, gains, ep_cfg, rng)
    print(f"epoch {epoch}: reward_mean={stats.reward_mean:.3f} "
          f"rmse_pos={stats.rmse_pos:.4f} mixture_var={stats.mixture_var_mean:.3f} "
          f"updated member {stats.updated_member}")
print(f"\nshared buffer holds {len(ensemble.buffer)} transitions")
