import logging
import time


class Heartbeat:
    """Rate-limited progress logger; emits at most one line per ``interval`` seconds."""

    def __init__(self, label: str, logger: logging.Logger, interval: float = 10.0):
        self.label = label
        self.logger = logger
        self.interval = interval
        self.start = time.monotonic()
        self._last = self.start

    def tick(self, message) -> None:
        now = time.monotonic()
        if now - self._last >= self.interval:
            self._last = now
            if callable(message):
                message = message()
            self.logger.info("[%s %.0fs] %s", self.label, now - self.start, message)

    @property
    def elapsed(self) -> float:
        return time.monotonic() - self.start
