"""Base-layer account model: byte blobs with monotone versions."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .errors import StateError

ACCOUNT_ID_BYTES = 32


@dataclass(frozen=True)
class AccountId:
    """Opaque 32-byte account identifier; the label is display-only."""

    raw: bytes
    label: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.raw) != ACCOUNT_ID_BYTES:
            raise ValueError(f"account id must be {ACCOUNT_ID_BYTES} bytes, got {len(self.raw)}")

    @classmethod
    def from_label(cls, label: str) -> "AccountId":
        return cls(hashlib.sha256(label.encode()).digest(), label)

    def __repr__(self) -> str:
        tag = self.label or self.raw[:4].hex()
        return f"AccountId({tag})"


@dataclass(frozen=True)
class AccountDiff:
    """Proposed new bytes and version for one account."""

    account: AccountId
    new_data: bytes
    new_version: int


@dataclass
class AccountState:
    account: AccountId
    data: bytes = b""
    version: int = 0
    delegated: bool = False

    def apply_diff(self, diff: AccountDiff) -> None:
        """Apply a finalized diff; versions only ever move forward by one."""
        if diff.account != self.account:
            raise StateError(f"diff for {diff.account!r} applied to {self.account!r}")
        if diff.new_version != self.version + 1:
            raise StateError(
                f"version conflict on {self.account!r}: have {self.version}, diff wants {diff.new_version}"
            )
        self.data = diff.new_data
        self.version = diff.new_version

    def base_write(self, data: bytes) -> None:
        """Direct base-layer write; rejected while the account is delegated."""
        if self.delegated:
            raise StateError(f"{self.account!r} is delegated; base-layer writes are locked")
        self.data = data
        self.version += 1
