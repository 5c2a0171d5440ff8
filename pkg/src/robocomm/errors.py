from __future__ import annotations

from dataclasses import dataclass
from typing import Optional


class RoboCommError(Exception):
    """Base error. ``reason`` is a stable machine-readable code."""

    reason = "Error"

    def __init__(self, reason: Optional[str] = None, detail: str = ""):
        if reason is not None:
            self.reason = reason
        self.detail = detail
        super().__init__(f"{self.reason}: {detail}" if detail else self.reason)


@dataclass(frozen=True)
class Verdict:
    accepted: bool
    reason: Optional[str] = None

    def __bool__(self) -> bool:
        return self.accepted

    @classmethod
    def ok(cls) -> "Verdict":
        return cls(True)

    @classmethod
    def rejected(cls, reason: str) -> "Verdict":
        return cls(False, reason)
