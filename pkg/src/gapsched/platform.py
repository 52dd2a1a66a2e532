"""VMs, bandwidths and per-VM idle-slot event queues.

Pre-occupied time is never stored explicitly. Each VM carries an
``EventQueue`` listing its *free* slots within one background period; the
occupied complement of that pattern repeats with ``background_period``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence


class EventQueueError(ValueError):
    """Base class for illegal event-queue operations."""


class QueueCorruptionError(EventQueueError):
    """Slots overlap or carry a negative duration."""


class AllocationError(EventQueueError):
    """Requested interval does not sit inside a single idle slot."""


class DoubleFreeError(EventQueueError):
    """Released interval overlaps time that is already idle."""


class IdleSlot(NamedTuple):
    start: int
    duration: int

    @property
    def end(self) -> int:
        return self.start + self.duration


@dataclass(frozen=True)
class EventQueue:
    vm_id: str
    slots: tuple[IdleSlot, ...] = ()

    @classmethod
    def from_pairs(cls, vm_id: str, pairs: Iterable[Sequence[int]]) -> "EventQueue":
        """Build a normalized queue from ``(start, duration)`` pairs."""
        raw = EventQueue(vm_id, tuple(IdleSlot(int(s), int(d)) for s, d in pairs))
        return normalize_event_queue(raw)

    @property
    def idle_time(self) -> int:
        return sum(s.duration for s in self.slots)

    def pairs(self) -> list[tuple[int, int]]:
        return [(s.start, s.duration) for s in self.slots]

    def __len__(self) -> int:
        return len(self.slots)


def normalize_event_queue(queue: EventQueue) -> EventQueue:
    """Sort slots by start and coalesce touching ones.

    Zero-length slots are dropped. Overlapping slots mean the queue was
    corrupted somewhere upstream and raise ``QueueCorruptionError``.
    """
    slots = sorted(queue.slots)
    merged: list[IdleSlot] = []
    for slot in slots:
        if slot.duration < 0:
            raise QueueCorruptionError(f"{queue.vm_id}: negative duration in {slot}")
        if slot.duration == 0:
            continue
        if merged:
            last = merged[-1]
            if slot.start < last.end:
                raise QueueCorruptionError(
                    f"{queue.vm_id}: slots {tuple(last)} and {tuple(slot)} overlap"
                )
            if slot.start == last.end:
                merged[-1] = IdleSlot(last.start, last.duration + slot.duration)
                continue
        merged.append(slot)
    return EventQueue(queue.vm_id, tuple(merged))


def allocate_interval(queue: EventQueue, start: int, duration: int) -> EventQueue:
    """Carve ``[start, start + duration)`` out of the idle slot holding it."""
    if duration <= 0:
        raise AllocationError(f"{queue.vm_id}: duration must be positive, got {duration}")
    end = start + duration
    for i, slot in enumerate(queue.slots):
        if slot.start <= start and end <= slot.end:
            pieces = []
            if start > slot.start:
                pieces.append(IdleSlot(slot.start, start - slot.start))
            if end < slot.end:
                pieces.append(IdleSlot(end, slot.end - end))
            return EventQueue(queue.vm_id, queue.slots[:i] + tuple(pieces) + queue.slots[i + 1:])
        if slot.start > start:
            break
    raise AllocationError(f"{queue.vm_id}: [{start}, {end}) is not inside one idle slot")


def release_interval(queue: EventQueue, start: int, duration: int) -> EventQueue:
    """Return ``[start, start + duration)`` to the idle pool and re-merge."""
    if duration <= 0:
        raise DoubleFreeError(f"{queue.vm_id}: duration must be positive, got {duration}")
    end = start + duration
    slots = queue.slots
    # insertion point: first slot starting at or after `start`
    i = 0
    while i < len(slots) and slots[i].start < start:
        i += 1
    if i > 0 and slots[i - 1].end > start:
        raise DoubleFreeError(f"{queue.vm_id}: [{start}, {end}) overlaps idle slot {tuple(slots[i - 1])}")
    if i < len(slots) and slots[i].start < end:
        raise DoubleFreeError(f"{queue.vm_id}: [{start}, {end}) overlaps idle slot {tuple(slots[i])}")

    lo, hi = start, end
    left, right = i, i
    if i > 0 and slots[i - 1].end == start:
        lo = slots[i - 1].start
        left = i - 1
    if i < len(slots) and slots[i].start == end:
        hi = slots[i].end
        right = i + 1
    return EventQueue(queue.vm_id, slots[:left] + (IdleSlot(lo, hi - lo),) + slots[right:])


def find_feasible_gap(
    queue: EventQueue, earliest: int, duration: int, latest_finish: int
) -> Optional[tuple[int, int]]:
    """Leftmost placement of ``duration`` ticks starting no earlier than
    ``earliest`` and finishing no later than ``latest_finish``.

    Returns ``(slot_index, placement_start)`` or ``None``.
    """
    if earliest + duration > latest_finish:
        return None
    for i, slot in enumerate(queue.slots):
        if slot.start >= latest_finish:
            break
        begin = max(earliest, slot.start)
        if begin + duration <= min(slot.end, latest_finish):
            return i, begin
    return None


def tile_queue(queue: EventQueue, period: int, horizon: int) -> EventQueue:
    """Repeat a one-period idle pattern over ``[0, horizon)``."""
    if period <= 0:
        raise ValueError("period must be positive")
    pieces = []
    for offset in range(0, horizon, period):
        for slot in queue.slots:
            s = slot.start + offset
            e = min(slot.end + offset, horizon)
            if s < e:
                pieces.append(IdleSlot(s, e - s))
    return normalize_event_queue(EventQueue(queue.vm_id, tuple(pieces)))


@dataclass(frozen=True)
class VmDescriptor:
    vm_id: str
    host_id: str = ""


def _link(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class Platform:
    """Heterogeneous VMs with a symmetric bandwidth matrix.

    ``bandwidth`` is keyed by unordered VM pair, stored as the sorted tuple.
    ``queues`` holds the idle pattern of one background period per VM.
    """

    vms: tuple[VmDescriptor, ...]
    bandwidth: Mapping[tuple[str, str], Fraction]
    queues: Mapping[str, EventQueue]
    background_period: int
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = [vm.vm_id for vm in self.vms]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate VM ids in {ids}")
        if self.background_period <= 0:
            raise ValueError("background_period must be positive")
        if set(self.queues) != set(ids):
            raise ValueError("every VM needs exactly one event queue")
        norm = {}
        for a in ids:
            for b in ids:
                if a < b:
                    bw = self.bandwidth.get((a, b), self.bandwidth.get((b, a)))
                    if bw is None or bw <= 0:
                        raise ValueError(f"missing or non-positive bandwidth for {a}-{b}")
                    norm[(a, b)] = Fraction(bw)
        object.__setattr__(self, "bandwidth", norm)
        for q in self.queues.values():
            if q.slots and (q.slots[0].start < 0 or q.slots[-1].end > self.background_period):
                raise ValueError(f"{q.vm_id}: idle pattern leaves [0, {self.background_period})")
        object.__setattr__(self, "_index", {vm_id: i for i, vm_id in enumerate(ids)})

    @property
    def vm_ids(self) -> list[str]:
        return [vm.vm_id for vm in self.vms]

    def vm_index(self, vm_id: str) -> int:
        try:
            return self._index[vm_id]
        except KeyError:
            raise KeyError(f"unknown VM {vm_id!r}") from None

    def link_bandwidth(self, a: str, b: str) -> Fraction:
        if a == b:
            raise ValueError("no link from a VM to itself")
        self.vm_index(a)
        self.vm_index(b)
        return self.bandwidth[_link(a, b)]

    def mean_bandwidth(self) -> Optional[Fraction]:
        """Mean over distinct VM pairs; ``None`` on a single-VM platform."""
        if not self.bandwidth:
            return None
        return sum(self.bandwidth.values(), Fraction(0)) / len(self.bandwidth)

    def tiled_queues(self, horizon: int) -> dict[str, EventQueue]:
        return {vm: tile_queue(self.queues[vm], self.background_period, horizon) for vm in self.vm_ids}

    def restrict(self, vm_ids: Sequence[str]) -> "Platform":
        """Sub-platform over ``vm_ids`` (order preserved from the argument)."""
        keep = [self.vms[self.vm_index(v)] for v in vm_ids]
        return Platform(
            vms=tuple(keep),
            bandwidth={k: v for k, v in self.bandwidth.items() if k[0] in vm_ids and k[1] in vm_ids},
            queues={v: self.queues[v] for v in vm_ids},
            background_period=self.background_period,
        )


def make_platform(
    vm_ids: Sequence[str],
    background_period: int,
    idle: Optional[Mapping[str, Iterable[Sequence[int]]]] = None,
    bandwidth: Optional[Mapping[tuple[str, str], object]] = None,
    default_bandwidth: object = 1,
) -> Platform:
    """Convenience constructor; VMs without an ``idle`` entry are fully free."""
    idle = idle or {}
    bandwidth = bandwidth or {}
    queues = {
        vm: EventQueue.from_pairs(vm, idle.get(vm, [(0, background_period)])) for vm in vm_ids
    }
    links = {}
    for i, a in enumerate(vm_ids):
        for b in vm_ids[i + 1:]:
            bw = bandwidth.get((a, b), bandwidth.get((b, a), default_bandwidth))
            links[_link(a, b)] = Fraction(bw)
    return Platform(
        vms=tuple(VmDescriptor(v, f"H{i}") for i, v in enumerate(vm_ids)),
        bandwidth=links,
        queues=queues,
        background_period=background_period,
    )
