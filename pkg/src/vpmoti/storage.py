"""Simulated paged disk behind a write-back LRU buffer.

Page transfers between the buffer and the store are the I/O metric. Frames
can hold decoded page objects (via a ``PageCodec``) so index code does not
re-parse resident pages; blocks are encoded only when a dirty frame leaves
the buffer.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import Any, Protocol


class CorruptIndexError(RuntimeError):
    """A page id that was never allocated was accessed."""


@dataclass
class IoStats:
    physical_reads: int = 0
    physical_writes: int = 0
    logical_accesses: int = 0

    def snapshot(self) -> "IoStats":
        return IoStats(self.physical_reads, self.physical_writes, self.logical_accesses)

    def __sub__(self, other: "IoStats") -> "IoStats":
        return IoStats(
            self.physical_reads - other.physical_reads,
            self.physical_writes - other.physical_writes,
            self.logical_accesses - other.logical_accesses,
        )


class PageStore:
    """The "disk": fixed-size byte blocks keyed by page id, bump-allocated."""

    def __init__(self, page_size: int = 4096):
        if page_size < 64:
            raise ValueError("page_size too small")
        self.page_size = page_size
        self._pages: dict[int, bytes] = {}
        self._next = 0

    def alloc(self) -> int:
        pid = self._next
        self._next += 1
        self._pages[pid] = bytes(self.page_size)
        return pid

    def read(self, pid: int) -> bytes:
        try:
            return self._pages[pid]
        except KeyError:
            raise CorruptIndexError(f"unknown page id {pid}") from None

    def write(self, pid: int, block: bytes) -> None:
        if pid not in self._pages:
            raise CorruptIndexError(f"unknown page id {pid}")
        if len(block) != self.page_size:
            raise ValueError(f"block length {len(block)} != page size {self.page_size}")
        self._pages[pid] = bytes(block)

    def __len__(self) -> int:
        return len(self._pages)

    def __contains__(self, pid: int) -> bool:
        return pid in self._pages


class PageCodec(Protocol):
    def encode(self, obj: Any, page_size: int) -> bytes: ...

    def decode(self, block: bytes) -> Any: ...


class RawCodec:
    def encode(self, obj: bytes, page_size: int) -> bytes:
        return obj

    def decode(self, block: bytes) -> bytes:
        return block


class BufferPool:
    """Write-back LRU buffer of ``capacity`` frames over a ``PageStore``."""

    def __init__(self, store: PageStore, capacity: int = 50, codec: PageCodec | None = None):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        self.store = store
        self.capacity = capacity
        self.codec = codec if codec is not None else RawCodec()
        self.stats = IoStats()
        # pid -> [obj, dirty]; order is recency, most recent last
        self._frames: OrderedDict[int, list] = OrderedDict()

    @property
    def page_size(self) -> int:
        return self.store.page_size

    def alloc_page(self) -> int:
        return self.store.alloc()

    def reset_stats(self) -> None:
        self.stats = IoStats()

    def resident(self) -> list[int]:
        """Resident page ids, least recently used first."""
        return list(self._frames)

    def _admit(self, pid: int, obj: Any, dirty: bool) -> None:
        frames = self._frames
        if len(frames) >= self.capacity:
            victim, (vobj, vdirty) = frames.popitem(last=False)
            if vdirty:
                self.store.write(victim, self.codec.encode(vobj, self.store.page_size))
                self.stats.physical_writes += 1
        frames[pid] = [obj, dirty]

    def get(self, pid: int) -> Any:
        """Fetch a page object, reading it from the store on a miss."""
        self.stats.logical_accesses += 1
        frame = self._frames.get(pid)
        if frame is not None:
            self._frames.move_to_end(pid)
            return frame[0]
        obj = self.codec.decode(self.store.read(pid))
        self.stats.physical_reads += 1
        self._admit(pid, obj, False)
        return obj

    def put(self, pid: int, obj: Any) -> None:
        """Install ``obj`` as the new content of ``pid`` (dirty, write-back)."""
        if pid not in self.store:
            raise CorruptIndexError(f"unknown page id {pid}")
        self.stats.logical_accesses += 1
        frame = self._frames.get(pid)
        if frame is not None:
            frame[0] = obj
            frame[1] = True
            self._frames.move_to_end(pid)
            return
        self._admit(pid, obj, True)

    def peek(self, pid: int) -> Any:
        """Read a page without touching recency or statistics (audits only)."""
        frame = self._frames.get(pid)
        if frame is not None:
            return frame[0]
        return self.codec.decode(self.store.read(pid))

    def read_page(self, pid: int) -> bytes:
        obj = self.get(pid)
        if isinstance(obj, (bytes, bytearray)):
            return bytes(obj)
        return self.codec.encode(obj, self.store.page_size)

    def write_page(self, pid: int, block: bytes) -> None:
        if len(block) != self.store.page_size:
            raise ValueError(f"block length {len(block)} != page size {self.store.page_size}")
        self.put(pid, self.codec.decode(bytes(block)))

    def flush(self) -> None:
        for pid, frame in self._frames.items():
            if frame[1]:
                self.store.write(pid, self.codec.encode(frame[0], self.store.page_size))
                self.stats.physical_writes += 1
                frame[1] = False
