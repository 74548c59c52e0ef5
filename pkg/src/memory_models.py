"""
Byte-addressable memory models sharing one logical signature.

- OracleMemory: a plain dict, the brute-force reference.
- SymmetricMemory: a radix tree of lazily allocated pages; uniform cost anywhere.
- AsymmetricMemory: an eagerly allocated flat low region plus a high region kept
  as a newest-first association list, so high writes cost a linear scan.

The "attached" kind is not a class of its own. It is built the way a session
would build it: the asymmetric object is defined, attached to the symmetric
object name, and the symmetric object is then defined as attachable. Its global
instance is an AsymmetricMemory reached directly, with nothing in between.

Footprints are accounted bookkeeping, not resident-set sizes, so they are
bit-identical across machines.
"""

import abc
import logging
from dataclasses import dataclass

from src.errors import AddressOutOfRangeError, InvalidByteError, InvalidParamsError
from src.registry import AbstractObjectSpec, PrimitiveSig, RegistryState

logger = logging.getLogger(__name__)

ADDR_LIMIT_64 = 1 << 64
SLOT_BYTES = 8
ENTRY_OVERHEAD = 32

MEMORY_KINDS = ("oracle", "symmetric", "asymmetric", "attached")


def _check_byte(val):
    if isinstance(val, bool) or not isinstance(val, int) or not 0 <= val <= 0xFF:
        raise InvalidByteError(f"value {val!r} is not a byte")


def _is_power_of_two(value):
    return isinstance(value, int) and value > 0 and value & (value - 1) == 0


class MemoryModel(abc.ABC):
    """The shared logical signature: read_byte, write_byte, footprint."""

    kind = None

    @abc.abstractmethod
    def read_byte(self, addr):
        """Return the last value written at addr, or 0."""

    @abc.abstractmethod
    def write_byte(self, addr, val):
        """Store a byte at addr."""

    @abc.abstractmethod
    def footprint(self):
        """Return the accounted backing size in bytes."""


class OracleMemory(MemoryModel):
    """Reference memory backed by a dict. Not benchmarked, so its footprint is 0."""

    kind = "oracle"

    def __init__(self):
        self.store = {}

    def read_byte(self, addr):
        return self.store.get(addr, 0)

    def write_byte(self, addr, val):
        _check_byte(val)
        self.store[addr] = val

    def footprint(self):
        return 0


class SymmetricMemory(MemoryModel):
    """
    Paged memory with a radix tree over page indices.

    The addr_bits - page_bits index bits are split into levels of level_bits,
    the top level taking the remainder. The root node exists from the start;
    other nodes and the pages themselves are allocated on first write. Every
    node is accounted at 8 bytes per child slot.
    """

    kind = "symmetric"

    def __init__(self, addr_bits=32, page_bits=12, level_bits=10):
        """
        Initialize the memory.

        Args:
            addr_bits: Address width, 16..64
            page_bits: log2 of the page size
            level_bits: Index bits resolved per radix level
        """
        if not isinstance(addr_bits, int) or not 16 <= addr_bits <= 64:
            raise InvalidParamsError(f"addr_bits must be in [16, 64], got {addr_bits}")
        if not isinstance(page_bits, int) or not 1 <= page_bits < addr_bits:
            raise InvalidParamsError(f"page_bits must be in [1, addr_bits), got {page_bits}")
        if not isinstance(level_bits, int) or level_bits < 1:
            raise InvalidParamsError(f"level_bits must be positive, got {level_bits}")

        self.addr_bits = addr_bits
        self.page_bits = page_bits
        self.level_bits = level_bits
        self.addr_limit = 1 << addr_bits
        self.page_size = 1 << page_bits
        self.page_mask = self.page_size - 1

        index_bits = addr_bits - page_bits
        widths = [level_bits] * (index_bits // level_bits)
        if index_bits % level_bits:
            widths.insert(0, index_bits % level_bits)
        self.level_widths = tuple(widths)

        # (shift, mask) applied to the page index at each level, top first
        levels = []
        shift = index_bits
        for width in widths:
            shift -= width
            levels.append((shift, (1 << width) - 1))
        self._levels = tuple(levels)

        self.allocated_pages = 0
        self.node_bytes = 0
        self.root = self._new_node(widths[0])

    def _new_node(self, width):
        slots = 1 << width
        self.node_bytes += SLOT_BYTES * slots
        return [None] * slots

    def _check_addr(self, addr):
        if not 0 <= addr < self.addr_limit:
            raise AddressOutOfRangeError(
                f"address {addr:#x} outside {self.addr_bits}-bit address space")

    def read_byte(self, addr):
        self._check_addr(addr)
        page_index = addr >> self.page_bits
        node = self.root
        for shift, mask in self._levels:
            node = node[(page_index >> shift) & mask]
            if node is None:
                return 0
        return node[addr & self.page_mask]

    def write_byte(self, addr, val):
        self._check_addr(addr)
        _check_byte(val)
        page_index = addr >> self.page_bits
        node = self.root
        last = len(self._levels) - 1
        for depth, (shift, mask) in enumerate(self._levels):
            slot = (page_index >> shift) & mask
            child = node[slot]
            if child is None:
                if depth == last:
                    child = bytearray(self.page_size)
                    self.allocated_pages += 1
                else:
                    child = self._new_node(self.level_widths[depth + 1])
                node[slot] = child
            node = child
        node[addr & self.page_mask] = val

    def footprint(self):
        return self.allocated_pages * self.page_size + self.node_bytes


class AsymmetricMemory(MemoryModel):
    """
    Flat low region plus an association-list high region.

    Addresses below flat_len index a zero-filled bytearray allocated up front.
    Higher addresses live in a newest-first list of records with no duplicate
    addresses; every access scans it, so n distinct high writes cost O(n^2).
    Each record is accounted at 32 bytes.
    """

    kind = "asymmetric"

    def __init__(self, flat_len=1 << 24):
        if not _is_power_of_two(flat_len) or flat_len >= ADDR_LIMIT_64:
            raise InvalidParamsError(f"flat_len must be a power of two below 2^64, got {flat_len}")
        self.flat_len = flat_len
        self.flat = bytearray(flat_len)
        # Parallel lists, newest record first.
        self.high_addrs = []
        self.high_vals = []

    def _check_addr(self, addr):
        if not 0 <= addr < ADDR_LIMIT_64:
            raise AddressOutOfRangeError(f"address {addr:#x} is not an unsigned 64-bit value")

    def read_byte(self, addr):
        if 0 <= addr < self.flat_len:
            return self.flat[addr]
        self._check_addr(addr)
        try:
            return self.high_vals[self.high_addrs.index(addr)]
        except ValueError:
            return 0

    def write_byte(self, addr, val):
        _check_byte(val)
        if 0 <= addr < self.flat_len:
            self.flat[addr] = val
            return
        self._check_addr(addr)
        try:
            self.high_vals[self.high_addrs.index(addr)] = val
        except ValueError:
            self.high_addrs.insert(0, addr)
            self.high_vals.insert(0, val)

    @property
    def high_entries(self):
        return len(self.high_addrs)

    def footprint(self):
        return self.flat_len + ENTRY_OVERHEAD * len(self.high_addrs)


@dataclass(frozen=True)
class MemoryParams:
    """Construction parameters shared by every memory kind."""

    addr_bits: int = 32
    page_bits: int = 12
    level_bits: int = 10
    flat_len: int = 1 << 24

    def validate(self, kind):
        """
        Check the parameters a kind actually uses.

        Args:
            kind: One of MEMORY_KINDS
        """
        if kind not in MEMORY_KINDS:
            raise InvalidParamsError(f"unknown memory kind {kind!r}; expected one of {', '.join(MEMORY_KINDS)}")
        if kind == "symmetric":
            SymmetricMemory(self.addr_bits, self.page_bits, self.level_bits)
        if kind in ("asymmetric", "attached"):
            if not _is_power_of_two(self.flat_len) or self.flat_len >= ADDR_LIMIT_64:
                raise InvalidParamsError(
                    f"flat_len must be a power of two below 2^64, got {self.flat_len}")

    def address_limit(self, kind):
        """Exclusive upper bound on addresses the kind accepts."""
        if kind == "symmetric":
            return 1 << self.addr_bits
        return ADDR_LIMIT_64


# Object specs for the two memories. Both expose the same logic functions.

SYMMETRIC_OBJECT = "bigmem::mem"
ASYMMETRIC_OBJECT = "bigmem-asymmetric::mem"
SYMMETRIC_FOUNDATION = "bigmem::mem$c"
ASYMMETRIC_FOUNDATION = "bigmem-asymmetric::mem$c"

MEMORY_LOGIC = (("read-byte", 2), ("write-byte", 3), ("footprint", 1))


def _memory_primitives(tag):
    suffix = f"{{{tag}}}" if tag else ""
    return tuple(
        PrimitiveSig(f"{logic}{suffix}", f"{logic}$a", f"{logic}{suffix}$c", arity)
        for logic, arity in MEMORY_LOGIC
    )


def symmetric_spec(attachable=True):
    return AbstractObjectSpec(
        name=SYMMETRIC_OBJECT,
        foundation=SYMMETRIC_FOUNDATION,
        primitives=_memory_primitives(None),
        attachable=attachable,
    )


def asymmetric_spec(non_executable=False):
    return AbstractObjectSpec(
        name=ASYMMETRIC_OBJECT,
        foundation=ASYMMETRIC_FOUNDATION,
        primitives=_memory_primitives("asymmetric"),
        non_executable=non_executable,
    )


def memory_registry(params=None):
    """
    An empty registry whose memory foundations construct real models.

    Args:
        params: MemoryParams for the constructed models

    Returns:
        RegistryState
    """
    params = params or MemoryParams()
    return (RegistryState()
            .register_foundation(
                SYMMETRIC_FOUNDATION,
                lambda: SymmetricMemory(params.addr_bits, params.page_bits, params.level_bits))
            .register_foundation(
                ASYMMETRIC_FOUNDATION,
                lambda: AsymmetricMemory(params.flat_len)))


def build_memory_world(kind, params=None):
    """
    Define the memory objects for a kind through the registry.

    Args:
        kind: "symmetric", "asymmetric" or "attached"
        params: MemoryParams

    Returns:
        tuple: (RegistryState, name of the object whose global instance is the memory)
    """
    params = params or MemoryParams()
    params.validate(kind)
    state = memory_registry(params)

    if kind == "symmetric":
        return state.define_object(symmetric_spec()), SYMMETRIC_OBJECT
    if kind == "asymmetric":
        return state.define_object(asymmetric_spec()), ASYMMETRIC_OBJECT
    if kind == "attached":
        # The implementation needs no global instance of its own.
        state = state.define_object(asymmetric_spec(non_executable=True))
        state = state.attach(SYMMETRIC_OBJECT, ASYMMETRIC_OBJECT)
        state = state.define_object(symmetric_spec())
        return state, SYMMETRIC_OBJECT
    raise InvalidParamsError(f"{kind!r} memories are not built through the registry")


def make_memory(kind, params=None):
    """
    Construct a memory model.

    Args:
        kind: One of MEMORY_KINDS
        params: MemoryParams (default values when None)

    Returns:
        MemoryModel
    """
    params = params or MemoryParams()
    params.validate(kind)
    if kind == "oracle":
        return OracleMemory()
    if kind == "symmetric":
        return SymmetricMemory(params.addr_bits, params.page_bits, params.level_bits)
    if kind == "asymmetric":
        return AsymmetricMemory(params.flat_len)

    state, name = build_memory_world(kind, params)
    binding = state.effective_binding(name)
    logger.debug(f"Attached memory {name} executes as {binding.effective_foundation}")
    return state.global_instance(name)
