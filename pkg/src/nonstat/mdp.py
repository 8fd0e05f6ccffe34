"""Average-reward MDP stack: extended value iteration and its learners.

Extended value iteration (EVI) maximizes the optimistic gain over a product
confidence set: per (s, a), transitions range over an L1 ball around the
empirical kernel intersected with the simplex, rewards over a clipped
interval.  Iterates are damped (half stay / half move), which keeps the
gain and the greedy policy of the optimistic model unchanged, halves the
bias, and guarantees convergence even when the optimistic chain is
periodic; the reported bias is rescaled accordingly, so the optimistic
Bellman inequalities hold at the reported (J~, h~) up to the error
parameter.

The learner wraps EVI with adaptive confidence widening: the L1 radius is
inflated by eta, doubled from 1/T until the bias span fits within twice the
diameter guess.  The cumulative widening budget is tracked and the learner
signals a restart when it crosses 4*S*sqrt(A*t*log(SAT/delta)), t being the
learner's own active-round count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .base import _Learner, register_learner
from .envs import InfiniteEnv, decode_policy, encode_policy
from .master import RunLog, master_core
from .rates import RateFunction, ucrl_rate

__all__ = [
    "EviOutput",
    "evi",
    "widen_to_span",
    "UcrlAcw",
    "AverageRewardWorld",
    "rho_ucrl",
    "run_master_ucrl",
    "run_bare_ucrl",
    "nbar",
    "doubling_dbar",
    "borl",
    "borl_interval_length",
    "borl_arm_count",
    "Exp3P",
    "compute_diameter",
    "optimal_gain",
]

EVI_MAX_ITER = 10**6


class EviError(RuntimeError):
    pass


@dataclass(frozen=True)
class EviOutput:
    policy: np.ndarray  # greedy action per state
    bias: np.ndarray  # h~, normalized to min 0
    gain: float  # J~
    iterations: int

    @property
    def span(self) -> float:
        return float(self.bias.max() - self.bias.min())


def _optimistic_shift(u_sorted_idx, p_hat, budget, u):
    """max over the L1 ball (cap 2) intersected with the simplex of p~ . u.

    Exact greedy solution: spend (budget + mass deficit)/2 adding mass to
    the best state, then drain from the worst states until the total is 1.
    Handles sub-stochastic p_hat (all-zero rows arise before any data).
    """
    p = p_hat.copy()
    deficit = 1.0 - float(p.sum())
    add = min((budget + deficit) / 2.0, 1.0 - p[u_sorted_idx[0]])
    p[u_sorted_idx[0]] += add
    excess = float(p.sum()) - 1.0
    i = len(u_sorted_idx) - 1
    while excess > 1e-12 and i > 0:
        s = u_sorted_idx[i]
        cut = min(p[s], excess)
        p[s] -= cut
        excess -= cut
        i -= 1
    return p


def evi(
    p_hat: np.ndarray,
    budgets: np.ndarray,
    r_max: np.ndarray,
    epsilon: float,
    max_iter: int = EVI_MAX_ITER,
) -> EviOutput:
    """Extended value iteration to accuracy epsilon.

    p_hat: (S, A, S) empirical kernels; budgets: (S, A) L1 radii; r_max:
    (S, A) upper confidence rewards already clipped to [0, 1].  Stops when
    the span of the damped increments falls below epsilon; the gain is the
    midpoint of the final increments and the bias is the half-normalized
    iterate, so Bellman residuals are within epsilon.
    """
    n_states, n_actions = r_max.shape
    u = np.zeros(n_states)
    budgets = np.minimum(budgets, 2.0)  # L1 diameter of the simplex
    for it in range(1, max_iter + 1):
        order = np.argsort(-u, kind="stable")
        target = np.empty((n_states, n_actions))
        for s in range(n_states):
            for a in range(n_actions):
                p_opt = _optimistic_shift(order, p_hat[s, a], budgets[s, a], u)
                target[s, a] = r_max[s, a] + 0.5 * float(p_opt @ u)
        greedy = np.argmax(target, axis=1)
        u_next = 0.5 * u + target[np.arange(n_states), greedy]
        inc = u_next - u
        span = float(inc.max() - inc.min())
        if span <= epsilon:
            gain = float(inc.max() + inc.min()) / 2.0
            bias = (u - u.min()) / 2.0
            return EviOutput(
                policy=greedy,
                bias=bias,
                gain=min(1.0, max(0.0, gain)),
                iterations=it,
            )
        u = u_next - u_next.min()
    raise EviError(
        f"value iteration exceeded {max_iter} iterations "
        f"(S={n_states}, A={n_actions}, eps={epsilon:g}, last span={span:g})"
    )


def widen_to_span(
    p_hat: np.ndarray,
    conf_budgets: np.ndarray,
    r_max: np.ndarray,
    epsilon: float,
    dbar: float,
    horizon: int,
) -> tuple[EviOutput, float]:
    """Double the widening until the bias span fits within 2 * dbar.

    Starts at eta = 1/T.  A budget of 2 already covers the whole simplex,
    so termination by eta <= 4 is asserted rather than looped past.
    """
    eta = 1.0 / horizon
    while True:
        out = evi(p_hat, conf_budgets + eta, r_max, epsilon)
        if out.span <= 2.0 * dbar:
            return out, eta
        if eta > 4.0:
            raise EviError(
                f"widening overflow: span {out.span:g} > 2*dbar at eta={eta:g}"
            )
        eta *= 2.0


def rho_ucrl(t: float, dbar: float, n_states: int, n_actions: int, horizon: int, delta: float) -> float:
    """min(dbar*S*sqrt(A*log/t) + dbar*S*A*log/t, dbar) with log = log(SAT/delta)."""
    lg = math.log(n_states * n_actions * horizon / delta)
    return min(
        dbar * n_states * math.sqrt(n_actions * lg / t) + dbar * n_states * n_actions * lg / t,
        dbar,
    )


class UcrlAcw(_Learner):
    """Optimistic average-reward learner with adaptive confidence widening.

    Episodes end when a visited pair doubles its count; the model is
    re-solved lazily at the first predict()/act() of a new episode.  State
    feedback is whatever pair (s, a, R, s') the caller actually played; the
    learner never assumes continuity of s across updates, which is exactly
    the re-assignment semantics pausing and resuming requires.
    """

    name = "ucrl"
    _fields = (
        "visit_total",
        "visit_episode",
        "trans_counts",
        "reward_sums",
        "t_int",
        "episode",
        "gamma_budget",
        "eta",
        "gain",
        "policy_table",
        "needs_solve",
        "signaled",
    )

    def __init__(self, n_states: int, n_actions: int, horizon: int, delta: float, dbar: float = 1.0):
        if dbar < 1.0:
            raise ValueError("diameter guess must be >= 1")
        self.n_states = n_states
        self.n_actions = n_actions
        self.horizon = horizon
        self.delta = delta
        self.dbar = float(dbar)
        self._log_term = math.log(n_states * n_actions * horizon / delta)
        self.visit_total = np.zeros((n_states, n_actions))
        self.visit_episode = np.zeros((n_states, n_actions))
        self.trans_counts = np.zeros((n_states, n_actions, n_states))
        self.reward_sums = np.zeros((n_states, n_actions))
        self.t_int = 0
        self.episode = 0
        self.gamma_budget = 0.0
        self.eta = 1.0 / horizon
        self.gain = 1.0
        self.policy_table = np.zeros(n_states, dtype=np.int64)
        self.needs_solve = True
        self.signaled = False

    def _params(self):
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "horizon": self.horizon,
            "delta": self.delta,
            "dbar": self.dbar,
        }

    @property
    def restart_signaled(self) -> bool:
        return self.signaled

    def _solve_episode(self):
        self.episode += 1
        nplus = np.maximum(self.visit_total, 1.0)
        p_hat = self.trans_counts / nplus[:, :, None]
        r_hat = self.reward_sums / nplus
        conf = 8.0 * np.sqrt(self._log_term / nplus)
        r_max = np.minimum(1.0, r_hat + conf)
        epsilon = math.sqrt(1.0 / (self.t_int + 1))
        out, eta = widen_to_span(
            p_hat,
            math.sqrt(self.n_states) * conf,
            r_max,
            epsilon,
            self.dbar,
            self.horizon,
        )
        self.eta = eta
        self.gain = out.gain
        self.policy_table = out.policy.astype(np.int64)
        self.needs_solve = False

    def _ensure_solved(self):
        if self.needs_solve:
            self._solve_episode()

    def predict(self) -> float:
        self._ensure_solved()
        return self.gain

    def act(self) -> int:
        self._ensure_solved()
        return encode_policy(self.policy_table, self.n_actions)

    def update(self, feedback):
        self._ensure_solved()
        s, a, reward, nxt = feedback
        self.visit_episode[s, a] += 1.0
        self.gamma_budget += self.eta
        self.t_int += 1
        if self.gamma_budget > 4.0 * self.n_states * math.sqrt(
            self.n_actions * self.t_int * self._log_term
        ):
            self.signaled = True
        self.trans_counts[s, a, nxt] += 1.0
        self.reward_sums[s, a] += reward
        if self.visit_episode[s, a] >= max(1.0, self.visit_total[s, a]):
            self.visit_total += self.visit_episode
            self.visit_episode[:] = 0.0
            self.needs_solve = True


register_learner("ucrl", UcrlAcw)


class AverageRewardWorld:
    """Continuing-MDP adapter: one framework round is one transition.

    The physical state persists across instance switches, blocks, and
    restarts; a newly resumed learner simply continues from wherever the
    trajectory currently is.
    """

    def __init__(self, env: InfiniteEnv):
        self.env = env
        self.state = env.init_state

    def play(self, t, policy, rng):
        s = self.state
        table = decode_policy(policy, self.env.n_states, self.env.n_actions)
        action = int(table[s])
        reward, nxt = self.env.step(t, s, action, rng)
        self.state = nxt
        return reward, (s, action, reward, nxt), self.env.optimal_value(t)

    def extras(self, record):
        learner = record.learner
        return {
            "episode": learner.episode,
            "eta": learner.eta,
            "gamma_budget": learner.gamma_budget,
            "dbar": learner.dbar,
            "borl_arm": -1,
        }


def run_master_ucrl(
    env: InfiniteEnv,
    dbar: float,
    horizon: int | None = None,
    delta: float | None = None,
    kappa: float = 1.0,
    seed: int = 0,
    run_index: int = 0,
) -> RunLog:
    """The reduction over the average-reward learner with a fixed diameter guess.

    Identical control flow to the generic runner, with the test inflation
    factor at 18 and a third restart cause: the active learner exhausting
    its widening budget.
    """
    from .harness import seed_derive

    horizon = env.horizon if horizon is None else horizon
    if delta is None:
        delta = 1.0 / horizon
    log = RunLog(mdp_columns=True)
    rate = ucrl_rate(env.n_states, env.n_actions, horizon, delta, dbar)
    master_core(
        AverageRewardWorld(env),
        lambda: UcrlAcw(env.n_states, env.n_actions, horizon, delta, dbar),
        rate,
        horizon,
        delta,
        kappa,
        seed_derive(seed, run_index, "env"),
        seed_derive(seed, run_index, "sched"),
        log,
        rho_factor=18.0,
        allow_signal_restart=True,
    )
    return log


def run_bare_ucrl(
    env: InfiniteEnv,
    dbar: float,
    horizon: int | None = None,
    delta: float | None = None,
    seed: int = 0,
    run_index: int = 0,
) -> RunLog:
    """Restart-free learner alone (the paired baseline): signals are ignored."""
    from .harness import seed_derive

    horizon = env.horizon if horizon is None else horizon
    if delta is None:
        delta = 1.0 / horizon
    rng_env = seed_derive(seed, run_index, "env")
    learner = UcrlAcw(env.n_states, env.n_actions, horizon, delta, dbar)
    world = AverageRewardWorld(env)
    log = RunLog(mdp_columns=True)
    for t in range(1, horizon + 1):
        g_tilde = learner.predict()
        policy = learner.act()
        reward, feedback, f_star = world.play(t, policy, rng_env)
        learner.update(feedback)
        log.append(
            t=t,
            block=0,
            epoch=0,
            active_order=-1,
            policy=policy,
            reward=reward,
            f_star=f_star,
            g_tilde=g_tilde,
            u_min=0.0,
            event="",
            episode=learner.episode,
            eta=learner.eta,
            gamma_budget=learner.gamma_budget,
            dbar=learner.dbar,
            borl_arm=-1,
        )
    return log


def nbar(
    n_states: int,
    n_actions: int,
    horizon: int,
    known_l: int | None = None,
    known_delta: float | None = None,
) -> float:
    """Epoch cap for the doubling diameter-guess strategy."""
    if (known_l is None) == (known_delta is None):
        raise ValueError("exactly one of known_l / known_delta must be given")
    if known_l is not None:
        return float(known_l)
    return 1.0 + 3.0 * (known_delta**2 * horizon / (n_states**2 * n_actions)) ** (1.0 / 3.0)


def doubling_dbar(
    env: InfiniteEnv,
    horizon: int | None = None,
    known_l: int | None = None,
    known_delta: float | None = None,
    delta: float | None = None,
    kappa: float = 1.0,
    seed: int = 0,
    run_index: int = 0,
) -> RunLog:
    """Unknown max diameter: run with a guess, double it when epochs overflow.

    The guess starts at 1; whenever the number of epochs under the current
    guess exceeds the cap (L when L is known, 1 + 3*(Delta^2 T / (S^2 A))^(1/3)
    when Delta is known), the guess doubles and a fresh run continues from
    the current round.
    """
    from .harness import seed_derive

    horizon = env.horizon if horizon is None else horizon
    if delta is None:
        delta = 1.0 / horizon
    cap = nbar(env.n_states, env.n_actions, horizon, known_l, known_delta)
    log = RunLog(mdp_columns=True)
    rng_env = seed_derive(seed, run_index, "env")
    rng_sched = seed_derive(seed, run_index, "sched")
    world = AverageRewardWorld(env)
    dbar = 1.0
    t = 1
    while t <= horizon:
        rate = ucrl_rate(env.n_states, env.n_actions, horizon, delta, dbar)
        t, reason = master_core(
            world,
            lambda dbar=dbar: UcrlAcw(env.n_states, env.n_actions, horizon, delta, dbar),
            rate,
            horizon,
            delta,
            kappa,
            rng_env,
            rng_sched,
            log,
            rho_factor=18.0,
            start_t=t,
            max_epochs=cap,
            allow_signal_restart=True,
        )
        if reason == "epoch_overflow":
            dbar *= 2.0
            if len(log):
                log.amend_event(f"double_dbar {dbar:g}")
    return log


def borl_interval_length(n_states: int, n_actions: int, horizon: int) -> int:
    return math.ceil(n_states * math.sqrt(n_actions * horizon))


def borl_arm_count(horizon: int) -> int:
    return max(1, math.ceil(math.log2(math.sqrt(horizon))))


class Exp3P:
    """Adversarial bandit over sub-algorithms, original known-horizon tuning.

    Probabilities mix an exponential-weights distribution with uniform
    exploration gamma and keep an optimistic bias on the importance-weighted
    estimates; every arm's probability stays at least gamma / n_arms.
    Rewards are consumed in [0, 1] (callers rescale their range).
    """

    def __init__(self, n_arms: int, n_rounds: int, delta: float | None = None):
        if n_arms < 1 or n_rounds < 1:
            raise ValueError("need n_arms >= 1 and n_rounds >= 1")
        self.n_arms = n_arms
        self.n_rounds = n_rounds
        if delta is None:
            delta = 1.0 / n_rounds
        log_k = math.log(n_arms) if n_arms > 1 else 0.0
        self.gamma = min(0.6, 2.0 * math.sqrt(0.6 * n_arms * log_k / n_rounds))
        self.alpha = 2.0 * math.sqrt(math.log(n_arms * n_rounds / delta))
        init = (self.alpha * self.gamma / 3.0) * math.sqrt(n_rounds / n_arms)
        self.log_weights = np.full(n_arms, init)

    def probabilities(self) -> np.ndarray:
        w = np.exp(self.log_weights - self.log_weights.max())
        return (1.0 - self.gamma) * w / w.sum() + self.gamma / self.n_arms

    def sample(self, rng) -> int:
        p = self.probabilities()
        u = rng.random()
        return int(np.searchsorted(np.cumsum(p), u, side="right").clip(0, self.n_arms - 1))

    def update(self, arm: int, reward: float):
        if not 0.0 <= reward <= 1.0 + 1e-12:
            raise ValueError(f"reward {reward} outside [0, 1]")
        p = self.probabilities()
        gain = np.zeros(self.n_arms)
        gain[arm] = reward / p[arm]
        bias = self.alpha / (p * math.sqrt(self.n_arms * self.n_rounds))
        self.log_weights = self.log_weights + (self.gamma / (3.0 * self.n_arms)) * (gain + bias)


def borl(
    env: InfiniteEnv,
    horizon: int | None = None,
    delta: float | None = None,
    kappa: float = 1.0,
    seed: int = 0,
    run_index: int = 0,
) -> RunLog:
    """No prior knowledge at all: adversarial-bandit selection among runs
    with geometrically spaced diameter guesses on fixed-length intervals."""
    from .harness import seed_derive

    horizon = env.horizon if horizon is None else horizon
    if delta is None:
        delta = 1.0 / horizon
    block = borl_interval_length(env.n_states, env.n_actions, horizon)
    n_arms = borl_arm_count(horizon)
    n_intervals = math.ceil(horizon / block)
    picker = Exp3P(n_arms, n_intervals)
    rng_env = seed_derive(seed, run_index, "env")
    rng_sched = seed_derive(seed, run_index, "sched")
    rng_borl = seed_derive(seed, run_index, "borl")
    world = AverageRewardWorld(env)
    log = RunLog(mdp_columns=True)
    t = 1
    while t <= horizon:
        arm = picker.sample(rng_borl)
        dbar = float(1 << arm)
        end = min(t + block - 1, horizon)
        sub = RunLog(mdp_columns=True)
        rate = ucrl_rate(env.n_states, env.n_actions, horizon, delta, dbar)
        master_core(
            world,
            lambda dbar=dbar: UcrlAcw(env.n_states, env.n_actions, horizon, delta, dbar),
            rate,
            horizon=horizon,
            delta=delta,
            kappa=kappa,
            rng_env=rng_env,
            rng_sched=rng_sched,
            log=sub,
            rho_factor=18.0,
            start_t=t,
            end_t=end,
            allow_signal_restart=True,
        )
        total = 0.0
        for i in range(len(sub)):
            row = {name: sub.column(name)[i] for name in sub.columns}
            row["borl_arm"] = arm
            log.append(**row)
            total += row["reward"]
        log.restarts.extend(sub.restarts)
        picker.update(arm, total / block)
        t = end + 1
    return log


# ---------------------------------------------------------------------------
# exact-model oracles


def compute_diameter(trans: np.ndarray, tol: float = 1e-9, max_iter: int = 10**6) -> float:
    """max over ordered state pairs of the optimal expected hitting time.

    Value iteration on the hitting-time equations per target state.  A
    structural reachability check (can every state reach every other under
    some action?) rejects non-communicating inputs up front; the iteration
    cap is a safety net for pathological mixing.
    """
    n_states = trans.shape[0]
    edges = (trans > 0).any(axis=1)  # s -> s' possible under some action
    reach = edges | np.eye(n_states, dtype=bool)
    for _ in range(n_states):
        reach = reach | (reach @ reach)
    if not reach.all():
        raise ValueError("MDP is not communicating (some state pair is unreachable)")

    diameter = 0.0
    for target in range(n_states):
        keep = [s for s in range(n_states) if s != target]
        if not keep:
            continue
        sub = trans[keep][:, :, keep]  # transitions among non-target states
        h = np.zeros(len(keep))
        for _ in range(max_iter):
            h_new = 1.0 + np.min(np.einsum("sat,t->sa", sub, h), axis=1)
            gap = float(np.abs(h_new - h).max())
            h = h_new
            if gap <= tol:
                break
        else:
            raise ValueError("hitting-time iteration failed to converge")
        diameter = max(diameter, float(h.max()))
    return diameter


def optimal_gain(trans: np.ndarray, rewards: np.ndarray, tol: float = 1e-9) -> float:
    """Exact optimal gain: zero-width confidence sets, EVI to tolerance."""
    n_states, n_actions = rewards.shape
    out = evi(trans, np.zeros((n_states, n_actions)), np.asarray(rewards, dtype=float), tol)
    return out.gain
