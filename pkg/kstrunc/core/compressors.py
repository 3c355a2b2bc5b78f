# SPDX-License-Identifier: MIT
"""Compressors for trajectory dumps."""
from __future__ import annotations

import importlib.util
import zlib
from abc import ABC, abstractmethod

snappy = None
if importlib.util.find_spec("snappy") is not None:
    import snappy

zstd = None
if importlib.util.find_spec("zstd") is not None:
    import zstd


class Compressor(ABC):
    """A byte-level compressor identified by a one-byte id in the dump envelope."""

    name: str
    id: int

    @classmethod
    def available(cls) -> bool:
        """Check if the compressor can be used in this environment.

        Returns:
            bool: True if the backing library is importable.
        """
        return True

    @abstractmethod
    def compress(self, data: bytes) -> bytes:
        """Compress a dump payload.

        Args:
            data (bytes): The payload.

        Returns:
            bytes: The compressed payload.
        """

    @abstractmethod
    def decompress(self, data: bytes) -> bytes:
        """Decompress a dump payload.

        Args:
            data (bytes): The compressed payload.

        Returns:
            bytes: The original payload.
        """


class NoCompression(Compressor):
    name = "noop"
    id = 0

    def compress(self, data: bytes) -> bytes:
        return data

    def decompress(self, data: bytes) -> bytes:
        return data


class Zlib(Compressor):
    name = "zlib"
    id = 2

    def __init__(self, level: int = 6) -> None:
        # a fixed level keeps dumps byte-identical across runs
        self.level = level

    def compress(self, data: bytes) -> bytes:
        return zlib.compress(data, self.level)

    def decompress(self, data: bytes) -> bytes:
        return zlib.decompress(data)


class Snappy(Compressor):
    name = "snappy"
    id = 1

    @classmethod
    def available(cls) -> bool:
        return snappy is not None

    def __init__(self) -> None:
        if snappy is None:
            err = "Snappy is not installed"
            raise ImportError(err)

        self.snappy = snappy

    def compress(self, data: bytes) -> bytes:
        return self.snappy.compress(data)  # type: ignore

    def decompress(self, data: bytes) -> bytes:
        return self.snappy.decompress(data)  # type: ignore


class Zstd(Compressor):
    name = "zstd"
    id = 3

    @classmethod
    def available(cls) -> bool:
        return zstd is not None

    def __init__(self) -> None:
        if zstd is None:
            err = "Zstd is not installed"
            raise ImportError(err)

        self.zstd = zstd

    def compress(self, data: bytes) -> bytes:
        return self.zstd.compress(data)

    def decompress(self, data: bytes) -> bytes:
        return self.zstd.decompress(data)


compressor_registry: dict[str, type[Compressor]] = {
    c.name: c for c in (Zstd, Snappy, Zlib, NoCompression)
}

compressor_lookup: dict[int, type[Compressor]] = {
    c.id: c for c in compressor_registry.values()
}


def register_new_compressor(compressor: type[Compressor]) -> None:
    """Register a new compressor under its ``name`` and ``id``.

    Args:
        compressor (type[Compressor]): The compressor class.

    Raises:
        ValueError: If the id is already taken by another compressor.
    """
    taken = compressor_lookup.get(compressor.id)
    if taken is not None and taken is not compressor:
        msg = f"Compressor id {compressor.id} is already used by {taken.name}"
        raise ValueError(msg)
    compressor_registry[compressor.name] = compressor
    compressor_lookup[compressor.id] = compressor


def pick_compressor(preferred: list[str]) -> type[Compressor]:
    """Pick the first available compressor from a preference list.

    Args:
        preferred (list[str]): Compressor names, most preferred first.

    Returns:
        type[Compressor]: The compressor to use, NoCompression if none matched.
    """
    for name in preferred:
        compressor = compressor_registry.get(name)
        if compressor is not None and compressor.available():
            return compressor

    return NoCompression


def list_compressors() -> list[str]:
    """List the available compressors.

    Returns:
        list[str]: The names of the usable compressors.
    """
    return [c.name for c in compressor_registry.values() if c.available()]
