"""Sanity-check the actor-critic stack on a 1-D point-mass task.

Shoving a damped point mass to the origin is about the smallest problem
with a real learning signal. A fresh agent should leave a random policy
far behind within a few dozen epochs.
"""
import numpy as np

from wiplab import SacAgent
from wiplab.toy import PointMassEnv, eval_point_mass, random_policy_reward, train_point_mass

rng = np.random.default_rng(0)
env = PointMassEnv()
agent = SacAgent(obs_dim=2, hidden=(32, 32), rng=rng)

baseline = random_policy_reward(env, episodes=20, rng=rng)
print(f"random policy mean episode reward: {baseline:.1f}")

curve = train_point_mass(agent, env, epochs=25, rng=rng)
for i in range(0, len(curve), 5):
    print(f"epoch {i + 1:>3}: mean episode reward {curve[i]:.1f}")

final = eval_point_mass(agent, env, episodes=20, rng=rng)
print(f"\ndeterministic policy after training: {final:.1f} "
      f"({final / baseline:.1f}x the random baseline)")
