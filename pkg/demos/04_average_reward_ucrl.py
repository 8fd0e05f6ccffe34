"""Infinite-horizon communicating MDPs: widening, diameter guesses, BoRL.

One framework round is one state transition; the learner's physical state
survives every pause, resume, and restart.  The demo shows (a) the exact
diameter and gain oracles on a river-swim chain, (b) the reduction over the
widening learner on a sticky two-state chain whose reward location flips,
(c) the doubling diameter-guess strategy, and (d) the adversarial-bandit
wrapper that removes all prior knowledge.

A caveat worth seeing first-hand: the published confidence width
8*sqrt(log(SAT/delta)/N) keeps the clipped reward sets saturated at 1 for
thousands of visits, so at these horizons every diameter guess induces the
same tie-broken optimistic policy and the three strategies produce
identical trajectories.  The machinery differentiates only at much larger
horizons (or tighter widths); everything here is exact, just conservative.
"""

import numpy as np

from nonstat import (
    borl,
    compute_diameter,
    doubling_dbar,
    dynamic_regret,
    make_env,
    nbar,
    optimal_gain,
    run_master_ucrl,
)
from nonstat.mdp import borl_arm_count, borl_interval_length


def river_swim(n=6, p_right=0.3, p_stay=0.6):
    trans = np.zeros((n, 2, n))
    rewards = np.zeros((n, 2))
    for s in range(n):
        trans[s, 0, max(0, s - 1)] = 1.0
        if s == 0:
            trans[s, 1, 0], trans[s, 1, 1] = 1.0 - p_right, p_right
        elif s == n - 1:
            trans[s, 1, s], trans[s, 1, s - 1] = p_right + p_stay, 1.0 - p_right - p_stay
        else:
            trans[s, 1, s + 1] = p_right
            trans[s, 1, s] = p_stay
            trans[s, 1, s - 1] = 1.0 - p_right - p_stay
    rewards[0, 0] = 0.05
    rewards[n - 1, 1] = 1.0
    return rewards, trans


rs_rewards, rs_trans = river_swim()
print(f"river swim (6 states): diameter {compute_diameter(rs_trans):.3f}, "
      f"optimal gain {optimal_gain(rs_trans, rs_rewards):.4f}\n")

# sticky two-state chain: both actions cross with probability 1/4, one of
# them collects the reward state's payout more often
T = 8192
sticky = [
    [[0.75, 0.25], [0.7, 0.3]],
    [[0.25, 0.75], [0.3, 0.7]],
]
env = make_env(
    {
        "kind": "infinite",
        "T": T,
        "S": 2,
        "A": 2,
        "segments": [
            {"length": T // 2, "rewards": [[0.1, 0.1], [0.9, 0.8]], "transitions": sticky},
            {"length": T - T // 2, "rewards": [[0.9, 0.8], [0.1, 0.1]], "transitions": sticky},
        ],
    }
)
print(f"sticky 2-state chain, reward location flips at T/2 = {T // 2}")
print(f"max diameter {env.max_diameter():.2f}; optimal gains "
      f"{env.optimal_value(1):.3f} -> {env.optimal_value(T):.3f}")

log = run_master_ucrl(env, dbar=env.max_diameter(), kappa=1.0, seed=0)
gains = np.asarray(log.column("g_tilde"))
print(f"reduction with the true diameter: regret {dynamic_regret(log):.1f}, "
      f"restarts {len(log.restarts)}")
print(f"  optimistic gain early/late: {gains[:16].mean():.3f} / {gains[-512:].mean():.3f}")
print(f"  learner episodes reached: {max(log.column('episode'))}")

print(f"\nepoch cap when L is known: nbar = {nbar(2, 2, T, known_l=2):.0f}")
dlog = doubling_dbar(env, known_l=2, kappa=1.0, seed=0)
print(f"doubling guess trajectory: {sorted(set(dlog.column('dbar')))} "
      f"(regret {dynamic_regret(dlog):.1f})")

B = borl_interval_length(2, 2, T)
M = borl_arm_count(T)
print(f"\nno prior knowledge: {M} guess arms on intervals of length {B}")
blog = borl(env, kappa=1.0, seed=0)
arms = blog.column("borl_arm")
print(f"arms pulled per interval: {[arms[i] for i in range(0, T, B)]}")
print(f"bandit-over-RL regret {dynamic_regret(blog):.1f}")
