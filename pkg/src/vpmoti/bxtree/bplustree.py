"""Paged B+-tree over unsigned 64-bit integer keys.

Nodes live in pages of a ``BufferPool``; fanout follows from the page size.
Leaves carry a fixed-width tuple of doubles per key. Keys must be unique.

Page layout (little endian): ``u8 kind, u8 pad, u16 count, u32 pad`` header,
then for leaves ``count`` keys followed by ``count * width`` doubles, and for
inner nodes ``count`` separator keys followed by ``count + 1`` child ids.
"""

from __future__ import annotations

import struct
from array import array
from bisect import bisect_left, bisect_right
from itertools import chain
from typing import Iterable, Iterator

from vpmoti.storage import BufferPool, CorruptIndexError

_HEADER = struct.Struct("<BBHI")
_LEAF, _INNER = 0, 1


class Leaf:
    __slots__ = ("keys", "vals")

    def __init__(self, keys=None, vals=None):
        self.keys: list[int] = keys if keys is not None else []
        self.vals: list[tuple] = vals if vals is not None else []


class Inner:
    __slots__ = ("keys", "children")

    def __init__(self, keys=None, children=None):
        self.keys: list[int] = keys if keys is not None else []
        self.children: list[int] = children if children is not None else []


class NodeCodec:
    def __init__(self, width: int):
        self.width = width
        self._leaf_fmt: dict[int, struct.Struct] = {}

    def _leaf_struct(self, n: int) -> struct.Struct:
        st = self._leaf_fmt.get(n)
        if st is None:
            st = self._leaf_fmt[n] = struct.Struct(f"<{n}Q{n * self.width}d")
        return st

    def encode(self, node, page_size: int) -> bytes:
        n = len(node.keys)
        if isinstance(node, Leaf):
            body = _HEADER.pack(_LEAF, 0, n, 0) + self._leaf_struct(n).pack(*node.keys, *chain.from_iterable(node.vals))
        else:
            body = _HEADER.pack(_INNER, 0, n, 0) + array("Q", node.keys).tobytes() + array("Q", node.children).tobytes()
        if len(body) > page_size:
            raise ValueError("node does not fit in a page")
        return body + bytes(page_size - len(body))

    def decode(self, block: bytes):
        kind, _, n, _ = _HEADER.unpack_from(block, 0)
        off = _HEADER.size
        if kind == _LEAF:
            fields = self._leaf_struct(n).unpack_from(block, off)
            it = iter(fields[n:])
            return Leaf(list(fields[:n]), list(zip(*[it] * self.width)))
        keys = array("Q")
        keys.frombytes(block[off : off + 8 * n])
        off += 8 * n
        children = array("Q")
        children.frombytes(block[off : off + 8 * (n + 1)])
        return Inner(keys.tolist(), children.tolist())


def leaf_capacity(page_size: int, width: int) -> int:
    return (page_size - _HEADER.size) // (8 + 8 * width)


def inner_capacity(page_size: int) -> int:
    """Maximum children per inner node."""
    return page_size // 16


class BPlusTree:
    """B+-tree whose nodes are pages in ``pool``.

    Several trees may share one pool; each allocates its own pages.
    """

    def __init__(self, pool: BufferPool, width: int = 5):
        if not isinstance(pool.codec, NodeCodec) or pool.codec.width != width:
            raise ValueError("pool must use a NodeCodec of matching width")
        self.pool = pool
        self.width = width
        self.leaf_cap = leaf_capacity(pool.page_size, width)
        self.inner_cap = inner_capacity(pool.page_size)
        if self.leaf_cap < 3 or self.inner_cap < 3:
            raise ValueError("page size too small for a B+-tree node")
        self.leaf_min = (self.leaf_cap + 1) // 2
        self.inner_min = (self.inner_cap + 1) // 2
        self.root = pool.alloc_page()
        pool.put(self.root, Leaf())
        self.height = 1
        self.size = 0

    def __len__(self) -> int:
        return self.size

    # -- lookup -------------------------------------------------------------

    def get(self, key: int):
        pool = self.pool
        node = pool.get(self.root)
        while isinstance(node, Inner):
            node = pool.get(node.children[bisect_right(node.keys, key)])
        i = bisect_left(node.keys, key)
        if i < len(node.keys) and node.keys[i] == key:
            return node.vals[i]
        return None

    def scan_ranges(self, ranges: Iterable[tuple[int, int]]) -> Iterator[tuple[int, tuple]]:
        """Yield ``(key, value)`` for keys inside any of the sorted, disjoint
        closed ranges.

        Keeps the root-to-leaf path of the last visit so each node is fetched
        at most once per consecutive stretch, like a cursor holding pins.
        """
        pool = self.pool
        inf = 1 << 64
        # path entries: [node, lo_bound, hi_bound]
        path = [[pool.get(self.root), 0, inf]]
        for lo, hi in ranges:
            cur = lo
            while True:
                while len(path) > 1 and not (path[-1][1] <= cur < path[-1][2]):
                    path.pop()
                node, nlo, nhi = path[-1]
                while isinstance(node, Inner):
                    i = bisect_right(node.keys, cur)
                    clo = node.keys[i - 1] if i > 0 else nlo
                    chi = node.keys[i] if i < len(node.keys) else nhi
                    node = pool.get(node.children[i])
                    nlo, nhi = clo, chi
                    path.append([node, nlo, nhi])
                keys = node.keys
                i = bisect_left(keys, cur)
                n = len(keys)
                while i < n and keys[i] <= hi:
                    yield keys[i], node.vals[i]
                    i += 1
                if i < n or nhi > hi or nhi >= inf:
                    break
                cur = nhi

    def items(self) -> Iterator[tuple[int, tuple]]:
        return self.scan_ranges([(0, (1 << 64) - 1)])

    # -- insert -------------------------------------------------------------

    def insert(self, key: int, val: tuple) -> None:
        split = self._insert(self.root, key, val)
        if split is not None:
            sep, right = split
            new_root = self.pool.alloc_page()
            self.pool.put(new_root, Inner([sep], [self.root, right]))
            self.root = new_root
            self.height += 1
        self.size += 1

    def _insert(self, pid: int, key: int, val: tuple):
        pool = self.pool
        node = pool.get(pid)
        if isinstance(node, Leaf):
            i = bisect_left(node.keys, key)
            if i < len(node.keys) and node.keys[i] == key:
                raise KeyError(f"duplicate key {key}")
            node.keys.insert(i, key)
            node.vals.insert(i, val)
            if len(node.keys) <= self.leaf_cap:
                pool.put(pid, node)
                return None
            mid = (len(node.keys) + 1) // 2
            right = Leaf(node.keys[mid:], node.vals[mid:])
            del node.keys[mid:]
            del node.vals[mid:]
            pool.put(pid, node)
            rpid = pool.alloc_page()
            pool.put(rpid, right)
            return right.keys[0], rpid

        i = bisect_right(node.keys, key)
        split = self._insert(node.children[i], key, val)
        if split is None:
            return None
        sep, rpid = split
        node.keys.insert(i, sep)
        node.children.insert(i + 1, rpid)
        if len(node.children) <= self.inner_cap:
            pool.put(pid, node)
            return None
        nchild = (len(node.children) + 1) // 2
        up = node.keys[nchild - 1]
        right = Inner(node.keys[nchild:], node.children[nchild:])
        del node.keys[nchild - 1 :]
        del node.children[nchild:]
        pool.put(pid, node)
        rp = pool.alloc_page()
        pool.put(rp, right)
        return up, rp

    # -- delete -------------------------------------------------------------

    def delete(self, key: int) -> tuple:
        val = self._delete(self.root, key)
        if self.height > 1:
            root = self.pool.get(self.root)
            if len(root.children) == 1:
                self.root = root.children[0]
                self.height -= 1
        self.size -= 1
        return val

    def _delete(self, pid: int, key: int) -> tuple:
        pool = self.pool
        node = pool.get(pid)
        if isinstance(node, Leaf):
            i = bisect_left(node.keys, key)
            if i >= len(node.keys) or node.keys[i] != key:
                raise KeyError(key)
            del node.keys[i]
            val = node.vals.pop(i)
            pool.put(pid, node)
            return val
        i = bisect_right(node.keys, key)
        cpid = node.children[i]
        val = self._delete(cpid, key)
        child = pool.get(cpid)
        low = self.leaf_min if isinstance(child, Leaf) else self.inner_min
        if _occupancy(child) < low:
            self._fix_child(pid, node, i, cpid, child)
        return val

    def _fix_child(self, pid: int, parent: Inner, i: int, cpid: int, child) -> None:
        pool = self.pool
        is_leaf = isinstance(child, Leaf)
        low = self.leaf_min if is_leaf else self.inner_min
        # borrow from a sibling with spare entries
        if i > 0:
            lpid = parent.children[i - 1]
            left = pool.get(lpid)
            if _occupancy(left) > low:
                if is_leaf:
                    child.keys.insert(0, left.keys.pop())
                    child.vals.insert(0, left.vals.pop())
                    parent.keys[i - 1] = child.keys[0]
                else:
                    child.keys.insert(0, parent.keys[i - 1])
                    child.children.insert(0, left.children.pop())
                    parent.keys[i - 1] = left.keys.pop()
                pool.put(lpid, left)
                pool.put(cpid, child)
                pool.put(pid, parent)
                return
        if i + 1 < len(parent.children):
            rpid = parent.children[i + 1]
            right = pool.get(rpid)
            if _occupancy(right) > low:
                if is_leaf:
                    child.keys.append(right.keys.pop(0))
                    child.vals.append(right.vals.pop(0))
                    parent.keys[i] = right.keys[0]
                else:
                    child.keys.append(parent.keys[i])
                    child.children.append(right.children.pop(0))
                    parent.keys[i] = right.keys.pop(0)
                pool.put(rpid, right)
                pool.put(cpid, child)
                pool.put(pid, parent)
                return
        # merge with a sibling; the right node of the pair is dropped
        if i > 0:
            li, lpid, rpid = i - 1, parent.children[i - 1], cpid
            left, right = pool.get(lpid), child
        else:
            li, lpid, rpid = i, cpid, parent.children[i + 1]
            left, right = child, pool.get(parent.children[i + 1])
        if is_leaf:
            left.keys.extend(right.keys)
            left.vals.extend(right.vals)
        else:
            left.keys.append(parent.keys[li])
            left.keys.extend(right.keys)
            left.children.extend(right.children)
        del parent.keys[li]
        del parent.children[li + 1]
        pool.put(lpid, left)
        pool.put(pid, parent)

    # -- audit --------------------------------------------------------------

    def check(self) -> int:
        """Verify structural invariants; returns the number of entries.

        Raises ``CorruptIndexError`` on the first violation.
        """
        pool = self.pool
        leaf_depths: set[int] = set()
        count = 0

        def walk(pid: int, lo: int | None, hi: int | None, depth: int, is_root: bool) -> None:
            nonlocal count
            node = pool.peek(pid)
            keys = node.keys
            if any(a >= b for a, b in zip(keys, keys[1:])):
                raise CorruptIndexError(f"page {pid}: keys out of order")
            if keys and ((lo is not None and keys[0] < lo) or (hi is not None and keys[-1] >= hi)):
                raise CorruptIndexError(f"page {pid}: key outside separator bounds")
            if isinstance(node, Leaf):
                if len(node.vals) != len(keys):
                    raise CorruptIndexError(f"page {pid}: key/value count mismatch")
                if not is_root and not (self.leaf_min <= len(keys) <= self.leaf_cap):
                    raise CorruptIndexError(f"page {pid}: leaf occupancy {len(keys)}")
                leaf_depths.add(depth)
                count += len(keys)
                return
            n = len(node.children)
            if n != len(keys) + 1:
                raise CorruptIndexError(f"page {pid}: child/key count mismatch")
            if is_root and n < 2:
                raise CorruptIndexError("inner root with a single child")
            if not is_root and not (self.inner_min <= n <= self.inner_cap):
                raise CorruptIndexError(f"page {pid}: inner occupancy {n}")
            bounds = [lo] + keys + [hi]
            for j, c in enumerate(node.children):
                walk(c, bounds[j], bounds[j + 1], depth + 1, False)

        walk(self.root, None, None, 1, True)
        if len(leaf_depths) > 1:
            raise CorruptIndexError(f"leaves at different depths {sorted(leaf_depths)}")
        if leaf_depths != {self.height}:
            raise CorruptIndexError("recorded height disagrees with leaf depth")
        if count != self.size:
            raise CorruptIndexError(f"entry count {count} != recorded size {self.size}")
        return count

    def leaf_pages(self) -> list[int]:
        """Leaf page ids in key order (audits and cost estimation)."""
        out: list[int] = []

        def walk(pid: int) -> None:
            node = self.pool.peek(pid)
            if isinstance(node, Leaf):
                out.append(pid)
            else:
                for c in node.children:
                    walk(c)

        walk(self.root)
        return out


def _occupancy(node) -> int:
    return len(node.keys) if isinstance(node, Leaf) else len(node.children)


def new_pool(page_size: int = 4096, capacity: int = 50, width: int = 5) -> BufferPool:
    from vpmoti.storage import PageStore

    return BufferPool(PageStore(page_size), capacity, NodeCodec(width))


__all__ = ["BPlusTree", "Inner", "Leaf", "NodeCodec", "new_pool", "leaf_capacity", "inner_capacity"]
