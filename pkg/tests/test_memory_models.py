"""
Tests for the memory models.
"""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import AddressOutOfRangeError, InvalidByteError, InvalidParamsError
from src.memory_models import (
    ASYMMETRIC_OBJECT,
    MEMORY_KINDS,
    SYMMETRIC_OBJECT,
    AsymmetricMemory,
    MemoryParams,
    OracleMemory,
    SymmetricMemory,
    build_memory_world,
    make_memory,
)
from src.registry import OWN, AttachedVia

FLAT = 1 << 24
SMALL = MemoryParams(addr_bits=32, page_bits=12, level_bits=10, flat_len=1 << 16)


@pytest.mark.parametrize('kind', MEMORY_KINDS)
def test_fresh_memory_reads_zero(kind):
    """Unwritten addresses read 0."""
    memory = make_memory(kind, SMALL)
    assert memory.read_byte(12345) == 0
    assert memory.read_byte((1 << 16) + 7) == 0


@pytest.mark.parametrize('kind', MEMORY_KINDS)
def test_read_after_write(kind):
    """A read returns the last value written."""
    memory = make_memory(kind, SMALL)
    memory.write_byte(7, 1)
    assert memory.read_byte(7) == 1
    memory.write_byte(7, 200)
    assert memory.read_byte(7) == 200


def test_asymmetric_high_region():
    """Addresses at or above flat_len live in the high region."""
    memory = AsymmetricMemory(FLAT)
    oracle = OracleMemory()
    for mem in (memory, oracle):
        mem.write_byte(FLAT + 5, 9)
    assert memory.read_byte(FLAT + 5) == oracle.read_byte(FLAT + 5) == 9
    assert memory.high_entries == 1
    assert memory.read_byte(FLAT + 6) == 0


def test_symmetric_footprint_accounting():
    """Pages cost 4096 bytes; nodes cost 8 bytes per slot."""
    memory = SymmetricMemory(addr_bits=32, page_bits=12, level_bits=10)
    assert memory.level_widths == (10, 10)
    # root only: 1024 slots
    assert memory.footprint() == 8192

    memory.write_byte(0x1234, 1)
    # one second-level node and one page
    assert memory.footprint() == 8192 + 8192 + 4096

    memory.write_byte(0x1235, 1)
    assert memory.footprint() == 8192 + 8192 + 4096

    memory.write_byte(0x2000, 1)
    assert memory.footprint() == 8192 + 8192 + 2 * 4096
    assert memory.allocated_pages == 2


def test_symmetric_full_width_addresses():
    """64-bit symmetric memories split the index into a short top level plus full levels."""
    memory = SymmetricMemory(addr_bits=64, page_bits=12, level_bits=10)
    assert memory.level_widths == (2, 10, 10, 10, 10, 10)
    memory.write_byte((1 << 64) - 1, 42)
    assert memory.read_byte((1 << 64) - 1) == 42
    assert memory.footprint() == 8 * 4 + 5 * 8192 + 4096


def test_symmetric_reads_allocate_nothing():
    """Reads never allocate."""
    memory = SymmetricMemory()
    before = memory.footprint()
    for addr in (0, 0x10000, 0xFFFFFFFF):
        memory.read_byte(addr)
    assert memory.footprint() == before


def test_symmetric_address_out_of_range():
    """Symmetric memories reject addresses beyond addr_bits."""
    memory = make_memory('symmetric', MemoryParams(addr_bits=16, page_bits=12))
    with pytest.raises(AddressOutOfRangeError):
        memory.write_byte(1 << 16, 1)
    with pytest.raises(AddressOutOfRangeError):
        memory.read_byte(-1)


def test_asymmetric_address_out_of_range():
    """Asymmetric memories accept any unsigned 64-bit address."""
    memory = AsymmetricMemory(1 << 16)
    memory.write_byte((1 << 64) - 1, 3)
    assert memory.read_byte((1 << 64) - 1) == 3
    with pytest.raises(AddressOutOfRangeError):
        memory.write_byte(1 << 64, 1)


@pytest.mark.parametrize('kind', MEMORY_KINDS)
def test_values_must_be_bytes(kind):
    """Only values 0..255 can be written."""
    memory = make_memory(kind, SMALL)
    with pytest.raises(InvalidByteError):
        memory.write_byte(1, 256)
    with pytest.raises(InvalidByteError):
        memory.write_byte(1, -1)


def test_asymmetric_footprint_accounting():
    """Flat region is eager; each distinct high address costs 32 bytes once."""
    memory = AsymmetricMemory(FLAT)
    assert memory.footprint() == 16777216

    memory.write_byte(100, 1)
    assert memory.footprint() == FLAT

    memory.write_byte(FLAT + 1, 1)
    memory.write_byte(FLAT + 1, 2)
    assert memory.high_entries == 1
    assert memory.footprint() == FLAT + 32

    for k in range(2, 12):
        memory.write_byte(FLAT + k, 1)
    assert memory.footprint() == FLAT + 32 * 11


def test_asymmetric_high_list_is_newest_first():
    """New high records are prepended."""
    memory = AsymmetricMemory(1 << 16)
    for addr in ((1 << 16) + 1, (1 << 16) + 2, (1 << 16) + 3):
        memory.write_byte(addr, 1)
    memory.write_byte((1 << 16) + 1, 5)
    assert memory.high_addrs == [(1 << 16) + 3, (1 << 16) + 2, (1 << 16) + 1]
    assert len(set(memory.high_addrs)) == len(memory.high_addrs)


@pytest.mark.parametrize('params, kind', [
    (MemoryParams(addr_bits=8), 'symmetric'),
    (MemoryParams(addr_bits=65), 'symmetric'),
    (MemoryParams(page_bits=32), 'symmetric'),
    (MemoryParams(level_bits=0), 'symmetric'),
    (MemoryParams(flat_len=3), 'asymmetric'),
    (MemoryParams(flat_len=0), 'attached'),
    (MemoryParams(), 'bogus'),
])
def test_invalid_params(params, kind):
    """Construction parameters are validated per kind."""
    with pytest.raises(InvalidParamsError):
        make_memory(kind, params)


def test_attached_is_asymmetric_without_indirection():
    """The attached memory is an AsymmetricMemory itself, not a wrapper."""
    attached = make_memory('attached', SMALL)
    direct = make_memory('asymmetric', SMALL)
    assert type(attached) is type(direct) is AsymmetricMemory
    assert type(attached).write_byte is AsymmetricMemory.write_byte


def test_attached_world_binding():
    """The symmetric object executes as the asymmetric implementation."""
    state, name = build_memory_world('attached', SMALL)
    assert name == SYMMETRIC_OBJECT
    binding = state.effective_binding(SYMMETRIC_OBJECT)
    assert binding.provenance == AttachedVia([ASYMMETRIC_OBJECT])
    assert binding.effective_exec == ('read-byte{asymmetric}$c', 'write-byte{asymmetric}$c',
                                      'footprint{asymmetric}$c')
    # the implementation is non-executable, so only one memory was allocated
    assert ASYMMETRIC_OBJECT not in state.globals
    assert state.globals == {SYMMETRIC_OBJECT}


def test_symmetric_world_binding():
    """Without an attachment the symmetric object executes as itself."""
    state, name = build_memory_world('symmetric', SMALL)
    assert state.effective_binding(name).provenance == OWN
    assert isinstance(state.global_instance(name), SymmetricMemory)


def test_attached_matches_asymmetric():
    """Attached and asymmetric memories behave identically on the same ops."""
    attached = make_memory('attached', SMALL)
    direct = make_memory('asymmetric', SMALL)
    addrs = [3, 70000, 1 << 20, 5, 70000, (1 << 32) - 1, 65535, 65536, 12, 99999]
    for i, addr in enumerate(addrs):
        attached.write_byte(addr, i + 1)
        direct.write_byte(addr, i + 1)
    for addr in addrs + [4, 65537]:
        assert attached.read_byte(addr) == direct.read_byte(addr)
    assert attached.footprint() == direct.footprint()


addresses = st.one_of(
    st.integers(min_value=0, max_value=(1 << 16) + 64),
    st.integers(min_value=0, max_value=(1 << 32) - 1),
)
ops = st.lists(st.tuples(st.booleans(), addresses, st.integers(min_value=0, max_value=255)),
               max_size=300)


@settings(max_examples=200, deadline=None)
@given(ops=ops)
def test_models_match_oracle(ops):
    """Every model agrees with the oracle on arbitrary op sequences."""
    oracle = OracleMemory()
    models = [make_memory(kind, SMALL) for kind in ('symmetric', 'asymmetric', 'attached')]
    footprints = [model.footprint() for model in models]
    for is_write, addr, value in ops:
        if is_write:
            oracle.write_byte(addr, value)
            for model in models:
                model.write_byte(addr, value)
        else:
            expected = oracle.read_byte(addr)
            assert [model.read_byte(addr) for model in models] == [expected] * len(models)
        now = [model.footprint() for model in models]
        assert all(after >= before for before, after in zip(footprints, now))
        footprints = now


@settings(max_examples=100, deadline=None)
@given(ops=ops)
def test_attachment_is_transparent(ops):
    """A test written against the logical signature passes under Own and attached bindings."""
    own_state, own_name = build_memory_world('symmetric', SMALL)
    attached_state, attached_name = build_memory_world('attached', SMALL)
    own = own_state.global_instance(own_name)
    attached = attached_state.global_instance(attached_name)
    assert own_name == attached_name

    for is_write, addr, value in ops:
        if is_write:
            own.write_byte(addr, value)
            attached.write_byte(addr, value)
        else:
            assert own.read_byte(addr) == attached.read_byte(addr)


@settings(max_examples=50, deadline=None)
@given(ops=ops)
def test_footprint_depends_only_on_ops(ops):
    """Replaying the same ops gives the same footprint."""
    results = []
    for _ in range(2):
        models = [make_memory(kind, SMALL) for kind in ('symmetric', 'asymmetric')]
        for is_write, addr, value in ops:
            if is_write:
                for model in models:
                    model.write_byte(addr, value)
        results.append([model.footprint() for model in models])
    assert results[0] == results[1]
