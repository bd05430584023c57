"""Elapsed-time logging to stderr, shared by solver worker threads."""
import datetime
import sys
import threading

_START_TIME = None
_LOCK = threading.Lock()


def _now() -> datetime.datetime:
    return datetime.datetime.now().replace(microsecond=0)


def initialize_start_time():
    """Initialize the start time for the logger."""
    global _START_TIME  # pylint: disable=global-statement
    _START_TIME = _now()


def elapsed() -> datetime.timedelta:
    global _START_TIME  # pylint: disable=global-statement
    if _START_TIME is None:
        _START_TIME = _now()
    return _now() - _START_TIME


def log(msg: str):
    """Prints `<elapsed> | msg` to stderr. Lines from concurrent solves do
    not interleave."""
    line = f'{elapsed()} | {msg}'
    with _LOCK:
        print(line, file=sys.stderr, flush=True)


class Progress:
    """Counts finished work items and logs about every tenth of the total."""

    def __init__(self, label: str, total: int):
        self.label = label
        self.total = total
        self.done = 0
        self._every = max(1, total // 10)
        self._lock = threading.Lock()

    def step(self):
        with self._lock:
            self.done += 1
            done = self.done
        if done % self._every == 0 or done == self.total:
            log(f'{self.label}: {done}/{self.total}')
