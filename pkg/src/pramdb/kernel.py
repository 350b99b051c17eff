"""Bulk-synchronous simulated CRCW PRAM.

Programs run in rounds.  Inside a round every processor reads the pre-round
memory and posts writes; the writes are resolved per write mode and applied
when the round closes.  Work, depth and space are counted exactly.

Two ways to express a round:

* ``with machine.round(procs) as r: ... r.write(arr, idx, val, pid)`` where the
  body computes all processors' reads and writes as numpy vectors (reads see
  the snapshot because nothing is applied before the block exits);
* ``machine.run_step(proc_count, program)`` which calls ``program(pid, mem)``
  once per processor.
"""
from __future__ import annotations

import contextlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import BoundsFault, ConflictFault, ParameterFault, WordOverflowFault

NONE = -1  # "no index" in link arrays; never used as a data value
WORD_MAX = (1 << 63) - 1

_MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)


class WriteMode(str, Enum):
    COMMON = "common"
    ARBITRARY = "arbitrary"
    PRIORITY = "priority"

    @classmethod
    def parse(cls, text: str | "WriteMode") -> "WriteMode":
        if isinstance(text, WriteMode):
            return text
        try:
            return cls(text.lower())
        except ValueError:
            raise ParameterFault(f"unknown write mode {text!r}") from None


@dataclass(frozen=True)
class MachineConfig:
    write_mode: WriteMode = WriteMode.ARBITRARY
    arbitrary_seed: int = 0
    accounting_enabled: bool = True
    macro_width: int = 64


@dataclass(frozen=True)
class Phase:
    label: str
    work: int
    depth: int
    space: int


@dataclass
class Metrics:
    work: int = 0
    depth: int = 0
    space: int = 0
    phases: list[Phase] = field(default_factory=list)

    def copy(self) -> "Metrics":
        return replace(self, phases=list(self.phases))

    def __sub__(self, other: "Metrics") -> "Metrics":
        return Metrics(self.work - other.work, self.depth - other.depth,
                       self.space, self.phases[len(other.phases):])


def _mix64(x: np.ndarray) -> np.ndarray:
    # splitmix64 finaliser on uint64 vectors (wrap-around arithmetic intended)
    with np.errstate(over="ignore"):
        x = (x + np.uint64(0x9E3779B97F4A7C15)) & _MASK64
        x = ((x ^ (x >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)) & _MASK64
        x = ((x ^ (x >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)) & _MASK64
        return x ^ (x >> np.uint64(31))


def arbitrary_choice(seed: int, round_no: int, address: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Deterministic pick in ``[0, counts)`` from (seed, round, address)."""
    a = np.asarray(address, dtype=np.int64).astype(np.uint64)
    h = _mix64(np.full(a.shape, np.uint64(seed & 0xFFFFFFFFFFFFFFFF)))
    h = _mix64(h ^ np.uint64(round_no & 0xFFFFFFFFFFFFFFFF))
    h = _mix64(h ^ a)
    return (h % np.asarray(counts, dtype=np.uint64)).astype(np.int64)


class SharedArray:
    """A region of shared memory.  ``data`` has shape (length,) or (length, width)."""

    __slots__ = ("handle", "base", "length", "width", "data", "name", "live")

    def __init__(self, handle: int, base: int, data: np.ndarray, name: str):
        self.handle = handle
        self.base = base
        self.data = data
        self.length = data.shape[0]
        self.width = data.shape[1] if data.ndim == 2 else None
        self.name = name
        self.live = True

    @property
    def cells(self) -> int:
        return self.length * (self.width if self.width is not None else 1)

    def __len__(self) -> int:
        return self.length

    def __repr__(self) -> str:
        return f"SharedArray({self.name!r}, handle={self.handle}, length={self.length})"

    def read(self, idx) -> np.ndarray:
        """Bounds-checked vector read."""
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= self.length):
            raise BoundsFault(f"read outside {self.name}[0:{self.length}]")
        return self.data[idx]


class Snapshot:
    """Read-only view handed to scalar step programs."""

    def __init__(self, machine: "Machine"):
        self._m = machine

    def __getitem__(self, key):
        handle, i = key
        arr = self._m.array(handle)
        if not 0 <= i < arr.length:
            raise BoundsFault(f"read {arr.name}[{i}] outside [0, {arr.length})")
        v = arr.data[i]
        return v.item() if hasattr(v, "item") and np.ndim(v) == 0 else v

    def length(self, handle) -> int:
        return self._m.array(handle).length


class Round:
    """Collects the writes of one synchronous round."""

    def __init__(self, machine: "Machine", procs: int, work: int | None):
        self.machine = machine
        self.procs = int(procs)
        self.work = self.procs if work is None else int(work)
        self._pending: dict[int, list] = {}
        self._full: dict[int, np.ndarray] = {}

    def charge(self, extra: int) -> None:
        self.work += int(extra)

    def write_all(self, arr: SharedArray, values) -> None:
        """Processor i writes cell i for every cell of ``arr`` (exclusive)."""
        values = np.asarray(values)
        if values.shape[0] != arr.length:
            raise BoundsFault(f"write_all of {values.shape[0]} values into {arr.name}[{arr.length}]")
        self._full[arr.handle] = values

    def write(self, arr: SharedArray, idx, val, pid=None) -> None:
        idx = np.asarray(idx, dtype=np.int64).reshape(-1)
        if idx.size == 0:
            return
        val = np.asarray(val, dtype=arr.data.dtype)
        if arr.width is None:
            val = np.broadcast_to(val, idx.shape)
        else:
            val = np.broadcast_to(val, (idx.size, arr.width))
        if pid is None:
            pid = np.arange(idx.size, dtype=np.int64)
        else:
            pid = np.broadcast_to(np.asarray(pid, dtype=np.int64), idx.shape)
        self._pending.setdefault(arr.handle, []).append((idx, val, pid))


class Machine:
    def __init__(self, config: MachineConfig | None = None, **kw):
        self.config = config if config is not None else MachineConfig(**kw)
        if self.config.macro_width < 1:
            raise ParameterFault("macro width must be positive")
        self.metrics = Metrics()
        self.rounds = 0  # always counted; feeds the Arbitrary hash
        self._arrays: dict[int, SharedArray] = {}
        self._stack: list[SharedArray] = []
        self._top = 0
        self._next_handle = 1
        self._phase_stack: list[str] = []

    # ----- memory -----
    def alloc(self, length: int, width: int | None = None, dtype=np.int64, fill=0,
              name: str = "") -> SharedArray:
        if length < 0:
            raise ParameterFault("negative allocation")
        shape = (int(length),) if width is None else (int(length), int(width))
        data = np.full(shape, fill, dtype=dtype)
        arr = SharedArray(self._next_handle, self._top, data, name or f"a{self._next_handle}")
        self._next_handle += 1
        self._arrays[arr.handle] = arr
        self._stack.append(arr)
        self._top += arr.cells
        if self.config.accounting_enabled and self._top > self.metrics.space:
            self.metrics.space = self._top
        return arr

    def allocate(self, size: int) -> SharedArray:
        return self.alloc(size)

    def adopt(self, data: np.ndarray, name: str = "") -> SharedArray:
        """Allocate a region initialised with host data (input loading)."""
        arr = self.alloc(data.shape[0], data.shape[1] if data.ndim == 2 else None,
                         dtype=data.dtype, name=name)
        arr.data[...] = data
        return arr

    def free(self, *arrays: SharedArray | None) -> None:
        for a in arrays:
            if a is not None and a.live:
                a.live = False
                self._arrays.pop(a.handle, None)
        while self._stack and not self._stack[-1].live:
            self._top -= self._stack.pop().cells

    def array(self, handle) -> SharedArray:
        if isinstance(handle, SharedArray):
            handle = handle.handle
        try:
            return self._arrays[handle]
        except KeyError:
            raise BoundsFault(f"unknown or retired array handle {handle}") from None

    # ----- rounds -----
    @contextlib.contextmanager
    def round(self, procs: int, work: int | None = None):
        r = Round(self, procs, work)
        yield r
        self._commit(r)

    def charge_round(self, work: int) -> None:
        """A round whose effect lives in host scratch (macro steps)."""
        with self.round(work):
            pass

    def _commit(self, r: Round) -> None:
        for handle, values in r._full.items():
            self.array(handle).data[...] = values
        for handle, parts in r._pending.items():
            arr = self.array(handle)
            if len(parts) == 1:
                idx, val, pid = parts[0]
            else:
                idx = np.concatenate([p[0] for p in parts])
                val = np.concatenate([p[1] for p in parts])
                pid = np.concatenate([p[2] for p in parts])
            self._apply(arr, idx, val, pid)
        if self.config.accounting_enabled:
            self.metrics.work += r.work
            self.metrics.depth += 1
        self.rounds += 1

    def _apply(self, arr: SharedArray, idx, val, pid) -> None:
        if idx.min() < 0 or idx.max() >= arr.length:
            bad = int(idx[(idx < 0) | (idx >= arr.length)][0])
            raise BoundsFault(f"write {arr.name}[{bad}] outside [0, {arr.length}) in round {self.rounds}")
        if idx.size == 1:
            arr.data[idx] = val
            return
        order = np.lexsort((pid, idx))
        sidx = idx[order]
        dup = sidx[1:] == sidx[:-1]
        if not dup.any():
            arr.data[idx] = val
            return
        starts = np.flatnonzero(np.concatenate(([True], ~dup)))
        counts = np.diff(np.append(starts, sidx.size))
        mode = self.config.write_mode
        if mode is WriteMode.PRIORITY:
            winners = order[starts]
        elif mode is WriteMode.ARBITRARY:
            pick = arbitrary_choice(self.config.arbitrary_seed, self.rounds,
                                    arr.base + sidx[starts], counts)
            winners = order[starts + pick]
        else:
            sval = val[order]
            group = np.repeat(np.arange(starts.size), counts)
            first = sval[starts][group]
            same = sval == first
            if same.ndim == 2:
                same = same.all(axis=1)
            if not same.all():
                k = int(np.flatnonzero(~same)[0])
                raise ConflictFault(self.rounds, int(arr.base + sidx[k]),
                                    f"{arr.name}[{int(sidx[k])}]")
            winners = order[starts]
        arr.data[sidx[starts]] = val[winners]

    def run_step(self, proc_count: int, step_program: Callable) -> Metrics:
        """Run one round with a per-processor program.

        ``step_program(pid, mem)`` returns an iterable of ``(handle, index, value)``
        writes, or ``None`` for a processor with nothing to do (not counted as work).
        """
        before = self.metrics.copy()
        mem = Snapshot(self)
        active = 0
        posts: list[tuple] = []
        for pid in range(int(proc_count)):
            out = step_program(pid, mem)
            if out is None:
                continue
            active += 1
            for handle, i, v in out:
                posts.append((pid, self.array(handle), i, v))
        with self.round(proc_count, work=active) as r:
            for pid, arr, i, v in posts:
                r.write(arr, [i], [v], [pid])
        return self.metrics - before

    def resolve_writes(self, pending: Sequence[tuple[int, object]], address: int = 0,
                       round_no: int | None = None):
        """Resolve concurrent writes to one address under this machine's mode."""
        return resolve_writes(pending, self.config.write_mode, self.config.arbitrary_seed,
                              self.rounds if round_no is None else round_no, address)

    # ----- macro step -----
    def exact_sum_small(self, values: Iterable[int]) -> int:
        vals = [int(v) for v in values]
        k = len(vals)
        if k > self.config.macro_width:
            raise ParameterFault(f"exact_sum_small over {k} > macro width {self.config.macro_width}")
        if any(v < 0 for v in vals):
            raise ParameterFault("exact_sum_small takes naturals")
        total = sum(vals)
        if total > WORD_MAX:
            raise WordOverflowFault(f"sum {total} exceeds word bound")
        self.charge_round(k * k)
        return total

    # ----- phases -----
    @contextlib.contextmanager
    def phase(self, label: str):
        self._phase_stack.append(label)
        w0, d0 = self.metrics.work, self.metrics.depth
        try:
            yield
        finally:
            full = "/".join(self._phase_stack)
            self._phase_stack.pop()
            self.metrics.phases.append(Phase(full, self.metrics.work - w0,
                                             self.metrics.depth - d0, self.metrics.space))


def resolve_writes(pending: Sequence[tuple[int, object]], mode: WriteMode | str, seed: int,
                   round_no: int, address: int):
    if not pending:
        raise ParameterFault("resolve_writes needs at least one pending write")
    mode = WriteMode.parse(mode)
    ordered = sorted(pending, key=lambda p: p[0])
    if len(ordered) == 1:
        return ordered[0][1]
    if mode is WriteMode.PRIORITY:
        return ordered[0][1]
    if mode is WriteMode.ARBITRARY:
        k = int(arbitrary_choice(seed, round_no, np.array([address]), np.array([len(ordered)]))[0])
        return ordered[k][1]
    first = ordered[0][1]
    if any(v != first for _, v in ordered[1:]):
        raise ConflictFault(round_no, address)
    return first
