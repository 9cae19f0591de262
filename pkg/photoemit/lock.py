"""Non-blocking lock guarding a solver while it marches."""

from threading import Lock as _Lock

from photoemit.common import LOGGER


__all__ = ["Locked", "Lock"]


class Locked(Exception):
    """Indicate that the guarded solver is already marching."""

    def __init__(self, owner: str):
        super().__init__(owner)
        self.owner = owner

    def __str__(self):
        return f"{self.owner} is busy"


class Lock:
    """Context manager that refuses to wait for a busy solver."""

    def __init__(self, owner: str = "solver"):
        self.owner = owner
        self._lock = _Lock()

    @property
    def busy(self) -> bool:
        """Whether a march is in progress."""
        return self._lock.locked()

    def __enter__(self):
        if not self._lock.acquire(blocking=False):
            LOGGER.warning("Refusing concurrent use of %s.", self.owner)
            raise Locked(self.owner)

        return self

    def __exit__(self, *_):
        self._lock.release()
