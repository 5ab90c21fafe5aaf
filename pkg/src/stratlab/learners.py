"""The algorithm zoo: adaptive strategies for repeated play, plus regret meters.

Every learner follows the same per-round protocol: act() returns a mixed
strategy (a tuple of floats), then observe(FeedbackRecord) delivers feedback.
Learners only ever see the game through their pre-play signal and through
feedback; nothing here touches the realized game directly, which is what makes
signal-forcing deviations (mimic_deviation) well defined.

Bandit-feedback learners emit sampled one-hot strategies: importance-weighted
estimates need the observed utility to belong to the sampled action.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Sequence

from .errors import InvalidArgumentError, ProtocolViolationError
from .games import (
    FeedbackRecord,
    GameMatrix,
    MixedStrategy,
    Prior,
    Trajectory,
    pure,
)
from .solve import perturbed_commitment, stackelberg_value

KINDS = (
    "constant_action",
    "multiplicative_weights",
    "bandit_exp3",
    "no_swap_regret_full",
    "no_swap_regret_bandit",
    "stackelberg_leader",
    "best_responder",
    "mimic_deviation",
    "reveal_then_follow_leader",
    "infer_then_commit_follower",
    "external_signal_leader",
)

DEFAULT_DELTA_EXPONENT = 0.25  # b in the schedule delta = T_m^(-b), 0 < b < 1-a
INITIAL_EPOCH = 64


@dataclass(frozen=True)
class LearnerSpec:
    """Declarative learner configuration; see KINDS for valid kinds."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown learner kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params)}

    @staticmethod
    def from_dict(d: dict) -> "LearnerSpec":
        try:
            return LearnerSpec(d["kind"], dict(d.get("params", {})))
        except (KeyError, TypeError) as e:
            raise InvalidArgumentError(f"malformed learner spec: {e}") from e


def _own_payoff_rows(g: GameMatrix, role: int) -> list[list[float]]:
    """rows[own_action][opp_action] = own utility of the pure profile."""
    if role == 1:
        return [list(row) for row in g.u1]
    return [[g.u2[a][b] for a in range(g.n1)] for b in range(g.n2)]


class Learner:
    """Base class enforcing the act/observe protocol."""

    requires_full_info = False
    needs_side_signal = False

    def __init__(self, spec: LearnerSpec, role: int, prior: Prior, signal: int, rng: Random):
        if role not in (1, 2):
            raise InvalidArgumentError(f"role must be 1 or 2, got {role}")
        if not 0 <= signal < prior.support_size:
            raise InvalidArgumentError(f"signal index {signal} out of range")
        self.spec = spec
        self.role = role
        self.prior = prior
        self.signal = signal
        self.rng = rng
        self.n_own = prior.n1 if role == 1 else prior.n2
        self.n_opp = prior.n2 if role == 1 else prior.n1
        self.t = 1
        self._awaiting_feedback = False

    def act(self) -> MixedStrategy:
        if self._awaiting_feedback:
            raise ProtocolViolationError("act called twice without observe")
        s = self._act()
        self._awaiting_feedback = True
        return s

    def observe(self, fb: FeedbackRecord) -> None:
        if not self._awaiting_feedback:
            raise ProtocolViolationError("observe called before act")
        if self.requires_full_info and fb.opponent_strategy is None:
            raise ProtocolViolationError(
                f"{self.spec.kind} requires full-information feedback"
            )
        self._observe(fb)
        self._awaiting_feedback = False
        self.t += 1

    def _act(self) -> MixedStrategy:
        raise NotImplementedError

    def _observe(self, fb: FeedbackRecord) -> None:
        pass


def learner_init(
    spec: LearnerSpec, role: int, prior: Prior, signal: int, rng: Random
) -> Learner:
    """Instantiate a learner's per-trial state.

    mimic_deviation resolves here: it is exactly its base learner initialized
    with the forced signal index.
    """
    if spec.kind == "mimic_deviation":
        try:
            base = spec.params["base"]
            forced = int(spec.params["signal"])
        except KeyError as e:
            raise InvalidArgumentError(f"mimic_deviation missing param {e}") from e
        if not isinstance(base, LearnerSpec):
            base = LearnerSpec.from_dict(base)
        if base.kind == "mimic_deviation":
            raise InvalidArgumentError("mimic_deviation cannot wrap itself")
        return learner_init(base, role, prior, forced, rng)
    cls = _CLASSES[spec.kind]
    return cls(spec, role, prior, signal, rng)


class ConstantAction(Learner):
    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        try:
            action = int(spec.params["action"])
        except KeyError as e:
            raise InvalidArgumentError("constant_action requires param 'action'") from e
        self._strategy = pure(self.n_own, action)

    def _act(self):
        return self._strategy


class _HedgeCore(Learner):
    """Shared machinery: log-weights, softmax, payoff normalization."""

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        lo, hi = prior.payoff_range(role)
        self._u_lo = lo
        self._u_scale = 1.0 / (hi - lo) if hi > lo else 1.0
        eta = spec.params.get("eta")
        if eta is not None and not eta > 0:
            raise InvalidArgumentError(f"eta must be positive, got {eta!r}")
        self._eta_fixed = eta
        self._log_n = math.log(self.n_own) if self.n_own > 1 else 0.0

    def _normalize(self, u: float) -> float:
        return (u - self._u_lo) * self._u_scale

    def _eta(self) -> float:
        if self._eta_fixed is not None:
            return self._eta_fixed
        return math.sqrt(self._log_n / self.t)

    @staticmethod
    def _softmax(lw: Sequence[float]) -> list[float]:
        m = max(lw)
        es = [math.exp(v - m) for v in lw]
        s = sum(es)
        return [e / s for e in es]


class MultiplicativeWeights(_HedgeCore):
    """Hedge over own actions; full information. Reward vectors are computed
    from the signaled game's own-payoff matrix against the observed opponent
    strategy."""

    requires_full_info = True

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        self._rows = _own_payoff_rows(prior.games[signal], role)
        self._lw = [0.0] * self.n_own

    def _act(self):
        return tuple(self._softmax(self._lw))

    def _observe(self, fb):
        opp = fb.opponent_strategy
        eta = self._eta()
        lw = self._lw
        for a, row in enumerate(self._rows):
            r = 0.0
            for o, po in enumerate(opp):
                if po:
                    r += row[o] * po
            lw[a] += eta * self._normalize(r)


class BanditExp3(_HedgeCore):
    """EXP3: sampled one-hot play with importance-weighted reward estimates."""

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        explore = spec.params.get("exploration")
        if explore is not None and not 0.0 <= explore <= 1.0:
            raise InvalidArgumentError(f"exploration must be in [0,1], got {explore!r}")
        self._explore_fixed = explore
        self._lw = [0.0] * self.n_own
        self._p = [1.0 / self.n_own] * self.n_own
        self._last_action = 0
        self._onehots = [pure(self.n_own, a) for a in range(self.n_own)]

    def _gamma(self) -> float:
        if self._explore_fixed is not None:
            return self._explore_fixed
        return min(1.0, math.sqrt(self.n_own * self._log_n / self.t)) if self.n_own > 1 else 0.0

    def _act(self):
        n = self.n_own
        gamma = self._gamma()
        base = self._softmax(self._lw)
        p = [(1.0 - gamma) * v + gamma / n for v in base]
        self._p = p
        r = self.rng.random()
        acc = 0.0
        a = n - 1
        for i, pi in enumerate(p):
            acc += pi
            if r < acc:
                a = i
                break
        self._last_action = a
        return self._onehots[a]

    def _observe(self, fb):
        a = self._last_action
        est = self._normalize(fb.own_utility) / self._p[a]
        step = self._eta_fixed if self._eta_fixed is not None else self._gamma() / self.n_own
        self._lw[a] += step * est


class _SwapRegretCore(_HedgeCore):
    """Expert reduction: one hedge instance per own action; play the stationary
    distribution of the experts' recommendation matrix (power iteration to
    1e-10, warm-started from the previous round)."""

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        n = self.n_own
        self._lw = [[0.0] * n for _ in range(n)]
        self._p = [1.0 / n] * n

    def _recommendations(self) -> list[list[float]]:
        return [self._softmax(lw) for lw in self._lw]

    def _stationary(self, q: list[list[float]]) -> list[float]:
        n = self.n_own
        if n == 1:
            return [1.0]
        cur = self._p
        for _ in range(10_000):
            nxt = [0.0] * n
            for e in range(n):
                pe = cur[e]
                if pe:
                    row = q[e]
                    for j in range(n):
                        nxt[j] += pe * row[j]
            s = sum(nxt)
            nxt = [v / s for v in nxt]
            diff = 0.0
            for a, b in zip(nxt, cur):
                diff += abs(a - b)
            cur = nxt
            if diff <= 1e-10:
                break
        return cur


class NoSwapRegretFull(_SwapRegretCore):
    requires_full_info = True

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        self._rows = _own_payoff_rows(prior.games[signal], role)

    def _act(self):
        self._p = self._stationary(self._recommendations())
        return tuple(self._p)

    def _observe(self, fb):
        opp = fb.opponent_strategy
        rewards = []
        for row in self._rows:
            r = 0.0
            for o, po in enumerate(opp):
                if po:
                    r += row[o] * po
            rewards.append(self._normalize(r))
        eta = self._eta()
        p = self._p
        lw = self._lw
        for e in range(self.n_own):
            scale = eta * p[e]
            if scale:
                lwe = lw[e]
                for b, rb in enumerate(rewards):
                    lwe[b] += scale * rb


class NoSwapRegretBandit(_SwapRegretCore):
    """Same reduction under bandit feedback: exploration-mixed sampling with
    importance-weighted estimates, gamma_t = min(1, sqrt(n ln n / t))."""

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        explore = spec.params.get("exploration")
        if explore is not None and not 0.0 <= explore <= 1.0:
            raise InvalidArgumentError(f"exploration must be in [0,1], got {explore!r}")
        self._explore_fixed = explore
        self._stat = [1.0 / self.n_own] * self.n_own
        self._played = [1.0 / self.n_own] * self.n_own
        self._last_action = 0
        self._onehots = [pure(self.n_own, a) for a in range(self.n_own)]

    def _gamma(self) -> float:
        if self._explore_fixed is not None:
            return self._explore_fixed
        return min(1.0, math.sqrt(self.n_own * self._log_n / self.t)) if self.n_own > 1 else 0.0

    def _act(self):
        n = self.n_own
        self._p = self._stationary(self._recommendations())
        self._stat = self._p
        gamma = self._gamma()
        p = [(1.0 - gamma) * v + gamma / n for v in self._p]
        self._played = p
        r = self.rng.random()
        acc = 0.0
        a = n - 1
        for i, pi in enumerate(p):
            acc += pi
            if r < acc:
                a = i
                break
        self._last_action = a
        return self._onehots[a]

    def _observe(self, fb):
        a = self._last_action
        est = self._normalize(fb.own_utility) / self._played[a]
        eta = self._eta_fixed if self._eta_fixed is not None else self._gamma() / self.n_own
        stat = self._stat
        lw = self._lw
        for e in range(self.n_own):
            scale = eta * stat[e]
            if scale:
                lw[e][a] += scale * est


class _EpochedCommitment(Learner):
    """Doubling-trick scaffolding: within an epoch of horizon T_m the learner
    commits to a strategy computed at perturbation delta = T_m^(-b)."""

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        b = spec.params.get("b", DEFAULT_DELTA_EXPONENT)
        if not 0.0 < b < 1.0:
            raise InvalidArgumentError(f"delta exponent b must be in (0,1), got {b!r}")
        self._b = b
        self.epoch_horizon = int(spec.params.get("initial_epoch", INITIAL_EPOCH))
        if self.epoch_horizon < 1:
            raise InvalidArgumentError("initial_epoch must be >= 1")
        self._cache: dict[tuple[int, int], MixedStrategy] = {}

    def delta(self) -> float:
        return self.epoch_horizon ** (-self._b)

    def _commitment(self, game_index: int) -> MixedStrategy:
        key = (game_index, self.epoch_horizon)
        s = self._cache.get(key)
        if s is None:
            s, _ = perturbed_commitment(self.prior.games[game_index], self.role, self.delta())
            self._cache[key] = s
        return s

    def _advance_epoch(self):
        while self.t > self.epoch_horizon:
            self.epoch_horizon *= 2


class StackelbergLeader(_EpochedCommitment):
    """Commits every round to the signaled game's perturbed Stackelberg
    commitment; trusts the signal as the true game."""

    def _act(self):
        self._advance_epoch()
        return self._commitment(self.signal)


class ExternalSignalLeader(_EpochedCommitment):
    """Commits to the perturbed Stackelberg commitment of the game named by a
    per-round side signal whose accuracy improves as 1 - t^(-decay)."""

    needs_side_signal = True

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        decay = spec.params.get("accuracy_decay", 1.0)
        if not decay > 0:
            raise InvalidArgumentError(f"accuracy_decay must be positive, got {decay!r}")
        self._decay = decay
        self._q = signal

    def side_signal_accuracy(self, t: int) -> float:
        return 1.0 - t ** (-self._decay)

    def receive_side_signal(self, index: int) -> None:
        if not 0 <= index < self.prior.support_size:
            raise InvalidArgumentError(f"side signal {index} out of range")
        self._q = index

    @property
    def last_side_signal(self) -> int:
        return self._q

    def _act(self):
        self._advance_epoch()
        return self._commitment(self._q)


class BestResponder(Learner):
    """Per-round best reply (in the signaled game) to the opponent's previous
    strategy; uniform opponent assumed in round 1. Lowest-index tie-break."""

    requires_full_info = True

    def __init__(self, spec, role, prior, signal, rng):
        super().__init__(spec, role, prior, signal, rng)
        self._rows = _own_payoff_rows(prior.games[signal], role)
        self._last_opp: MixedStrategy | None = None
        self._cached_reply: MixedStrategy | None = None

    def _reply_to(self, opp: Sequence[float]) -> MixedStrategy:
        best_a, best_v = 0, -math.inf
        for a, row in enumerate(self._rows):
            v = 0.0
            for o, po in enumerate(opp):
                if po:
                    v += row[o] * po
            if v > best_v:
                best_a, best_v = a, v
        return pure(self.n_own, best_a)

    def _act(self):
        if self._last_opp is None:
            return self._round_one()
        if self._cached_reply is None:
            self._cached_reply = self._reply_to(self._last_opp)
        return self._cached_reply

    def _round_one(self) -> MixedStrategy:
        return self._reply_to([1.0 / self.n_opp] * self.n_opp)

    def _observe(self, fb):
        opp = fb.opponent_strategy
        if opp != self._last_opp:
            self._last_opp = opp
            self._cached_reply = None


class RevealThenFollowLeader(BestResponder):
    """Scripted benchmark leader for player 1: round 1 plays the game-indexed
    pure action (signal index mod n1), then best-responds like BestResponder."""

    def __init__(self, spec, role, prior, signal, rng):
        if role != 1:
            raise InvalidArgumentError("reveal_then_follow_leader is a player-1 algorithm")
        super().__init__(spec, role, prior, signal, rng)

    def _round_one(self):
        return pure(self.n_own, self.signal % self.n_own)


class InferThenCommitFollower(Learner):
    """Scripted benchmark follower for player 2: round 1 plays action 0, then
    commits to the optimistic Stackelberg commitment of the game inferred from
    player 1's round-1 action (argmax action mod support size)."""

    requires_full_info = True

    def __init__(self, spec, role, prior, signal, rng):
        if role != 2:
            raise InvalidArgumentError("infer_then_commit_follower is a player-2 algorithm")
        super().__init__(spec, role, prior, signal, rng)
        self._commitment: MixedStrategy | None = None

    def _act(self):
        if self._commitment is None:
            return pure(self.n_own, 0)
        return self._commitment

    def _observe(self, fb):
        if self._commitment is None:
            opp = fb.opponent_strategy
            inferred = max(range(len(opp)), key=lambda a: opp[a]) % self.prior.support_size
            self._commitment = stackelberg_value(
                self.prior.games[inferred], self.role
            ).leader_strategy


_CLASSES = {
    "constant_action": ConstantAction,
    "multiplicative_weights": MultiplicativeWeights,
    "bandit_exp3": BanditExp3,
    "no_swap_regret_full": NoSwapRegretFull,
    "no_swap_regret_bandit": NoSwapRegretBandit,
    "stackelberg_leader": StackelbergLeader,
    "best_responder": BestResponder,
    "reveal_then_follow_leader": RevealThenFollowLeader,
    "infer_then_commit_follower": InferThenCommitFollower,
    "external_signal_leader": ExternalSignalLeader,
}


def _resolve_base(spec: LearnerSpec) -> LearnerSpec:
    while spec.kind == "mimic_deviation":
        base = spec.params.get("base")
        if not isinstance(base, LearnerSpec):
            base = LearnerSpec.from_dict(base)
        spec = base
    return spec


def spec_requires_full_info(spec: LearnerSpec) -> bool:
    return _CLASSES[_resolve_base(spec).kind].requires_full_info


def spec_needs_side_signal(spec: LearnerSpec) -> bool:
    return _CLASSES[_resolve_base(spec).kind].needs_side_signal


# ---------------------------------------------------------------------------
# Regret meters (pure functions over trajectories)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegretReport:
    external_regret: float
    swap_regret: float
    swap_targets: tuple[int, ...]  # per own action, the best replacement


def joint_mass(traj: Trajectory) -> list[list[float]]:
    """Un-normalized sum of per-round outer products x_t (x) y_t."""
    if not traj.rounds:
        raise InvalidArgumentError("empty trajectory")
    x0, y0 = traj.rounds[0]
    mass = [[0.0] * len(y0) for _ in range(len(x0))]
    for x, y in traj.rounds:
        for a, xa in enumerate(x):
            if xa:
                row = mass[a]
                for b, yb in enumerate(y):
                    if yb:
                        row[b] += xa * yb
    return mass


def regrets_from_mass(
    mass: Sequence[Sequence[float]], g: GameMatrix, player: int
) -> RegretReport:
    """External and swap regret of `player` given the cumulative joint mass.

    The joint mass is a sufficient statistic for both: the best fixed action
    needs only the opponent's marginal, and the best swap function decomposes
    per source action over the conditional opponent mass.
    """
    if player == 1:
        own_n, opp_n = g.n1, g.n2
        cond = [[mass[a][b] for b in range(opp_n)] for a in range(own_n)]
        u = [[g.u1[a][b] for b in range(opp_n)] for a in range(own_n)]
    else:
        own_n, opp_n = g.n2, g.n1
        cond = [[mass[b][a] for b in range(opp_n)] for a in range(own_n)]
        u = [[g.u2[b][a] for b in range(opp_n)] for a in range(own_n)]

    actual = 0.0
    opp_marginal = [0.0] * opp_n
    for a in range(own_n):
        row = cond[a]
        ua = u[a]
        for o in range(opp_n):
            actual += ua[o] * row[o]
            opp_marginal[o] += row[o]

    fixed_totals = [
        sum(u[a][o] * opp_marginal[o] for o in range(opp_n)) for a in range(own_n)
    ]
    external = max(fixed_totals) - actual

    swap_total = 0.0
    targets = []
    for a in range(own_n):
        row = cond[a]
        current = sum(u[a][o] * row[o] for o in range(opp_n))
        best_v, best_a = current, a
        for a2 in range(own_n):
            v = sum(u[a2][o] * row[o] for o in range(opp_n))
            if v > best_v + 1e-15:
                best_v, best_a = v, a2
        swap_total += best_v - current
        targets.append(best_a)
    return RegretReport(external, swap_total, tuple(targets))


def external_regret(traj: Trajectory, g: GameMatrix, player: int) -> float:
    """Cumulative regret versus the best fixed action, against the recorded
    opponent strategy sequence."""
    return regrets_from_mass(joint_mass(traj), g, player).external_regret


def swap_regret(traj: Trajectory, g: GameMatrix, player: int) -> RegretReport:
    """Cumulative swap regret and the optimal per-action swap function."""
    return regrets_from_mass(joint_mass(traj), g, player)
