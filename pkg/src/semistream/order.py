"""Random-order streams and t-bounded adversaries.

The adversary holds a hand of at most ``t`` cards. Cards are drawn from the
(already shuffled) deck one at a time; after each draw the strategy may pass
any held cards on to the algorithm. Drawing a card into a full hand is a
protocol violation. ``sigma[i]`` is the emission position of the ``i``-th
arrival, so ``|{j < i : sigma[j] > sigma[i]}|`` counts the earlier arrivals
still held when arrival ``i`` is emitted.
"""

from __future__ import annotations

import heapq
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from ._rng import make_rng
from .errors import InputError, ParameterError, ProtocolViolation


def random_shuffle(n: int, seed: int) -> tuple:
    """Uniform permutation of ``range(n)`` (Fisher-Yates on a seeded Philox stream)."""
    if n < 1:
        raise ParameterError("n must be >= 1")
    return tuple(int(i) for i in make_rng(seed).permutation(n))


def _as_permutation(sigma) -> np.ndarray:
    s = np.asarray(sigma)
    if s.ndim != 1 or len(s) == 0:
        raise InputError("sigma must be a non-empty 1-D sequence")
    if not np.issubdtype(s.dtype, np.integer):
        raise InputError("sigma must contain integers")
    n = len(s)
    seen = np.zeros(n, dtype=bool)
    if s.min() < 0 or s.max() >= n:
        raise InputError("sigma is not a permutation of range(n)")
    seen[s] = True
    if not seen.all():
        raise InputError("sigma is not a bijection")
    return s.astype(np.int64)


def min_bound(sigma) -> int:
    """Least t for which ``sigma`` is t-bounded.

    Equals ``1 + max_i |{j < i : sigma[j] > sigma[i]}|``, computed in O(n) as
    the peak hand size of a lazily drawing adversary.
    """
    s = _as_permutation(sigma)
    n = len(s)
    order = np.empty(n, dtype=np.int64)
    order[s] = np.arange(n)  # emission position -> arrival index
    frontier = np.maximum.accumulate(order)
    return int((frontier + 1 - np.arange(n)).max())


def inverse(sigma) -> list:
    """Arrival indices listed in emission order."""
    s = _as_permutation(sigma)
    out = np.empty(len(s), dtype=np.int64)
    out[s] = np.arange(len(s))
    return out.tolist()


def reorder(stream: Sequence, sigma) -> list:
    """Apply an emission-position map to ``stream``."""
    if len(stream) != len(sigma):
        raise InputError("trace length differs from stream length")
    return [stream[i] for i in inverse(sigma)]


@dataclass(frozen=True)
class AdversaryTrace:
    sigma: tuple
    hand_high_water: int
    peak_hand: int = 0  # physical peak of the simulated hand (>= hand_high_water)
    steps: tuple | None = None  # (received arrival index, emitted arrival indices)

    def to_json(self) -> str:
        return json.dumps({"sigma": list(self.sigma), "hand_high_water": self.hand_high_water})

    @classmethod
    def from_json(cls, text: str) -> "AdversaryTrace":
        try:
            obj = json.loads(text)
            sigma = tuple(int(v) for v in obj["sigma"])
        except (ValueError, KeyError, TypeError) as exc:
            raise InputError(f"malformed trace: {exc}") from None
        bound = min_bound(sigma)
        return cls(sigma, int(obj.get("hand_high_water", bound)), bound)


# --------------------------------------------------------------------------
# strategies


class Strategy:
    """Base class. ``on_draw`` returns the arrival indices to emit right now."""

    capacity: int | None = None

    def start(self, stream: Sequence, t: int, rng) -> None:
        pass

    def on_draw(self, i: int) -> Sequence[int]:
        raise NotImplementedError

    def on_exhausted(self) -> Sequence[int]:
        return ()


class Passthrough(Strategy):
    def on_draw(self, i):
        return (i,)


class DelaySet(Strategy):
    """Hold every targeted point until the deck runs out.

    When holding would fill the hand, the oldest held target is released so the
    strategy never exceeds ``capacity``.
    """

    def __init__(self, targets, capacity: int | None = None):
        self.targets = frozenset(targets)
        self.capacity = capacity

    def start(self, stream, t, rng):
        self._ids = [p.id if hasattr(p, "id") else p for p in stream]
        self._held = deque()
        self._cap = t if self.capacity is None else min(self.capacity, t)

    def on_draw(self, i):
        if self._ids[i] not in self.targets:
            return (i,)
        self._held.append(i)
        if len(self._held) >= self._cap:
            return (self._held.popleft(),)
        return ()

    def on_exhausted(self):
        out = list(self._held)
        self._held.clear()
        return out


class DepthOrder(Strategy):
    """Release points in non-decreasing ``key`` order, stable by arrival.

    The adversary knows the whole multiset of keys: a held point is released
    once every point with a smaller key has been emitted. If the hand fills
    up first, the held point with the smallest key is released early.
    """

    def __init__(self, key: Callable[[Any], Any], capacity: int | None = None):
        self.key = key
        self.capacity = capacity

    def start(self, stream, t, rng):
        self._keys = [self.key(p) for p in stream]
        self._pending = Counter(self._keys)
        self._levels = sorted(self._pending)
        self._cursor = 0
        self._by_key = {}
        self._heap = []
        self._emitted = np.zeros(len(stream), dtype=bool)
        self._n_held = 0
        self._cap = t if self.capacity is None else min(self.capacity, t)

    def _current(self):
        while self._cursor < len(self._levels) and self._pending[self._levels[self._cursor]] == 0:
            self._cursor += 1
        return self._levels[self._cursor] if self._cursor < len(self._levels) else None

    def _emit(self, i, out):
        self._emitted[i] = True
        self._pending[self._keys[i]] -= 1
        out.append(i)

    def _release_ready(self, out):
        while True:
            cur = self._current()
            bucket = self._by_key.get(cur)
            if not bucket:
                return
            while bucket:
                i = bucket.popleft()
                if not self._emitted[i]:
                    self._n_held -= 1
                    self._emit(i, out)

    def on_draw(self, i):
        out = []
        k = self._keys[i]
        if k == self._current():
            self._emit(i, out)
            self._release_ready(out)
            return out
        self._by_key.setdefault(k, deque()).append(i)
        heapq.heappush(self._heap, (k, i))
        self._n_held += 1
        while self._n_held >= self._cap:
            _, j = heapq.heappop(self._heap)
            if not self._emitted[j]:
                self._n_held -= 1
                self._emit(j, out)
        self._release_ready(out)
        return out

    def on_exhausted(self):
        out = []
        for _, j in sorted(self._heap):
            if not self._emitted[j]:
                self._emit(j, out)
        self._heap.clear()
        self._by_key.clear()
        self._n_held = 0
        return out


class Custom(Strategy):
    """Wrap ``fn(hand, drawn, exhausted) -> indices to emit``.

    ``hand`` is the tuple of held arrival indices in arrival order (including
    ``drawn``); after exhaustion ``fn`` is called with ``drawn=None`` until the
    hand is empty.
    """

    def __init__(self, fn, capacity: int | None = None):
        self.fn = fn
        self.capacity = capacity

    def start(self, stream, t, rng):
        self._hand = {}
        self.rng = rng

    def _call(self, drawn, exhausted):
        out = list(self.fn(tuple(self._hand), drawn, exhausted))
        for j in out:
            self._hand.pop(j, None)
        return out

    def on_draw(self, i):
        self._hand[i] = None
        return self._call(i, False)

    def on_exhausted(self):
        out = []
        while self._hand:
            got = self._call(None, True)
            if not got:
                break
            out.extend(got)
        return out


def target_order(order: Sequence[int]) -> Custom:
    """Strategy that reproduces a requested emission order (arrival indices)
    using the smallest hand possible."""
    want = list(order)
    state = {"next": 0}

    def fn(hand, drawn, exhausted):
        held = set(hand)
        out = []
        while state["next"] < len(want) and want[state["next"]] in held:
            out.append(want[state["next"]])
            held.discard(want[state["next"]])
            state["next"] += 1
        return out

    return Custom(fn)


# --------------------------------------------------------------------------
# harness


def apply_adversary(stream: Sequence, strategy: Strategy, t: int, seed: int = 0, *, log_steps: bool = False):
    """Run ``strategy`` as a t-bounded adversary over ``stream``.

    Returns ``(reordered stream, AdversaryTrace)``.
    """
    if t < 1:
        raise ParameterError("t must be >= 1")
    if strategy.capacity is not None and strategy.capacity > t:
        raise ParameterError(f"strategy capacity {strategy.capacity} exceeds t={t}")
    n = len(stream)
    strategy.start(stream, t, make_rng(seed))
    hand: dict = {}
    emitted: list = []
    peak = 0
    steps = [] if log_steps else None

    def give(indices, step):
        for j in indices:
            try:
                del hand[j]
            except KeyError:
                raise ProtocolViolation(f"strategy emitted {j}, which is not in its hand", step) from None
            emitted.append(j)

    for i in range(n):
        hand[i] = None
        if len(hand) > t:
            raise ProtocolViolation(f"hand would hold {len(hand)} > t={t} cards", i)
        if len(hand) > peak:
            peak = len(hand)
        out = strategy.on_draw(i)
        give(out, i)
        if steps is not None:
            steps.append((i, tuple(out)))
    out = strategy.on_exhausted()
    give(out, n)
    if steps is not None and out:
        steps.append((None, tuple(out)))
    if hand:
        raise ProtocolViolation(f"{len(hand)} cards never emitted", n)

    sigma = np.empty(n, dtype=np.int64)
    sigma[np.asarray(emitted, dtype=np.int64)] = np.arange(n)
    trace = AdversaryTrace(tuple(sigma.tolist()), min_bound(sigma) if n else 0, peak, tuple(steps) if steps is not None else None)
    return [stream[j] for j in emitted], trace


def semirandom_stream(stream: Sequence, strategy: Strategy, t: int, seed: int):
    """Shuffle ``stream`` uniformly, then let the adversary reorder it.

    Returns ``(emitted stream, shuffle permutation, trace over the shuffled stream)``.
    """
    perm = random_shuffle(len(stream), seed)
    shuffled = [stream[i] for i in perm]
    out, trace = apply_adversary(shuffled, strategy, t, seed)
    return out, perm, trace


def make_strategy(name: str, stream: Sequence, t: int, seed: int, key=None) -> Strategy:
    """Build a named strategy: ``passthrough``, ``delay-set`` or ``depth-order``.

    ``delay-set`` targets ``t - 1`` points drawn at random; ``depth-order``
    uses ``key`` (default: the first payload coordinate or node depth).
    """
    name = name.replace("_", "-")
    if name == "passthrough":
        return Passthrough()
    if name == "delay-set":
        rng = make_rng(seed)
        size = min(max(t - 1, 0), len(stream))
        picks = rng.choice(len(stream), size=size, replace=False) if size else []
        return DelaySet({stream[int(i)].id for i in picks}, capacity=t)
    if name == "depth-order":
        return DepthOrder(key or default_key, capacity=t)
    raise ParameterError(f"unknown adversary {name!r}")


def default_key(point):
    payload = point.payload
    if isinstance(payload, tuple):
        if payload and isinstance(payload[0], (int, np.integer)) and not isinstance(payload[0], bool):
            return len(payload)
        return payload[0] if payload else 0
    return payload


ADVERSARIES = ("passthrough", "delay-set", "depth-order")
