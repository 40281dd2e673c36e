"""Shared networking utilities: rate limiting and retry policy."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, TypeVar

T = TypeVar("T")


class TransportError(RuntimeError):
    """Network or HTTP-level failure; retryable."""


class RateLimited(TransportError):
    """Server asked us to back off (HTTP 429)."""


class TokenBucket:
    """Thread-safe token bucket; acquire() blocks until a token is available."""

    def __init__(self, rate_per_second: float, burst: int = 1):
        self.rate = float(rate_per_second)
        self.capacity = max(1, burst)
        self._tokens = float(self.capacity)
        self._updated = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(
                    self.capacity, self._tokens + (now - self._updated) * self.rate
                )
                self._updated = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass(frozen=True)
class RetryPolicy:
    max_retries: int = 3
    base_delay: float = 0.5
    multiplier: float = 2.0


def with_retries(
    fn: Callable[[], T],
    policy: RetryPolicy = RetryPolicy(),
    sleep: Callable[[float], None] = time.sleep,
) -> T:
    """Run fn, retrying transport errors and 429s with exponential backoff."""
    delay = policy.base_delay
    for attempt in range(policy.max_retries + 1):
        try:
            return fn()
        except TransportError:
            if attempt == policy.max_retries:
                raise
            sleep(delay)
            delay *= policy.multiplier
    raise AssertionError("unreachable")
