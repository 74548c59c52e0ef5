"""
Oracle-equivalence fuzzing of the memory models.

Random read/write sequences are replayed against every model alongside an
OracleMemory; any read that disagrees with the oracle is a divergence. The
op generator is splitmix64-driven, so a (seed, op count) pair fully
reproduces a run.
"""

import logging
from dataclasses import dataclass, field
from functools import partial

from src.bench import SplitMix64
from src.errors import InvalidParamsError
from src.memory_models import MemoryParams, OracleMemory, make_memory

logger = logging.getLogger(__name__)

FUZZ_KINDS = ("symmetric", "asymmetric", "attached")

# Greedy minimization is quadratic in the prefix length.
MINIMIZE_LIMIT = 2000


@dataclass(frozen=True)
class FuzzConfig:
    """
    Fuzzing parameters.

    flat_len is kept small so the asymmetric high region is hit often, and
    high addresses are drawn from a pool of high_pool addresses so the
    association list stays short enough for 10^5 ops.
    """

    ops: int = 100000
    seed: int = 1
    addr_bits: int = 32
    page_bits: int = 12
    level_bits: int = 10
    flat_len: int = 1 << 16
    high_pool: int = 1024

    @property
    def params(self):
        return MemoryParams(self.addr_bits, self.page_bits, self.level_bits, self.flat_len)

    def validate(self):
        if self.ops < 0:
            raise InvalidParamsError(f"ops must be non-negative, got {self.ops}")
        if self.high_pool < 1:
            raise InvalidParamsError(f"high_pool must be positive, got {self.high_pool}")
        for kind in FUZZ_KINDS:
            self.params.validate(kind)
        if self.flat_len >= 1 << self.addr_bits:
            raise InvalidParamsError("flat_len must leave a high region inside the address space")
        return self


@dataclass(frozen=True)
class MemoryOp:
    is_write: bool
    addr: int
    value: int = 0

    def __str__(self):
        if self.is_write:
            return f"write {self.addr:#x} {self.value}"
        return f"read {self.addr:#x}"


@dataclass(frozen=True)
class Divergence:
    """First read where a model disagreed with the oracle."""

    index: int
    model: str
    op: MemoryOp
    expected: int
    actual: object

    def __str__(self):
        return (f"op {self.index} ({self.op}): {self.model} returned {self.actual!r}, "
                f"oracle returned {self.expected}")


@dataclass
class FuzzResult:
    config: FuzzConfig
    ops_run: int
    divergence: Divergence = None
    reproduction: list = field(default_factory=list)

    @property
    def ok(self):
        return self.divergence is None

    def report(self):
        """Human-readable verdict, including how to reproduce a divergence."""
        if self.ok:
            return f"OK: {self.ops_run} ops, all models agree with the oracle (seed {self.config.seed})"
        lines = [
            f"DIVERGENCE: {self.divergence}",
            f"reproduce with: fuzz --ops {self.divergence.index + 1} --seed {self.config.seed}",
            f"minimized reproduction ({len(self.reproduction)} ops):",
        ]
        lines.extend(f"  {op}" for op in self.reproduction)
        return "\n".join(lines)


def generate_ops(config):
    """
    Generate a deterministic mixed read/write sequence.

    Addresses mix uniform low-region picks, a fixed pool of high addresses,
    region edges and neighbours of the previous address.

    Args:
        config: FuzzConfig

    Returns:
        list: MemoryOps
    """
    rng = SplitMix64(config.seed)
    limit = 1 << config.addr_bits
    high_span = limit - config.flat_len
    pool = [config.flat_len + rng.below(high_span) for _ in range(config.high_pool)]
    edges = [0, config.flat_len - 1, config.flat_len, limit - 1]

    ops = []
    prev = 0
    for _ in range(config.ops):
        r = rng.next()
        region = (r >> 1) % 8
        if region < 3:
            addr = rng.below(config.flat_len)
        elif region < 6:
            addr = pool[rng.below(len(pool))]
        elif region == 6:
            addr = edges[rng.below(len(edges))]
        else:
            addr = min(max(prev + rng.below(17) - 8, 0), limit - 1)
        prev = addr
        if r & 1:
            ops.append(MemoryOp(True, addr, (r >> 8) & 0xFF))
        else:
            ops.append(MemoryOp(False, addr))
    return ops


def default_factories(params):
    """name -> zero-argument constructor for every fuzzed memory kind."""
    return {kind: partial(make_memory, kind, params) for kind in FUZZ_KINDS}


def find_divergence(ops, factories):
    """
    Replay ops against fresh models and an oracle.

    Args:
        ops: MemoryOps
        factories: name -> zero-argument model constructor

    Returns:
        Divergence or None
    """
    oracle = OracleMemory()
    models = {name: factory() for name, factory in factories.items()}
    for index, op in enumerate(ops):
        if op.is_write:
            oracle.write_byte(op.addr, op.value)
        else:
            expected = oracle.read_byte(op.addr)
        for name, model in models.items():
            try:
                if op.is_write:
                    model.write_byte(op.addr, op.value)
                    continue
                actual = model.read_byte(op.addr)
            except Exception as e:
                return Divergence(index, name, op, oracle.read_byte(op.addr), f"raised {e!r}")
            if actual != expected:
                return Divergence(index, name, op, expected, actual)
    return None


def minimize(ops, factory, model):
    """
    Greedily drop ops while the failing model still diverges.

    Args:
        ops: Diverging op sequence, ending at the divergence
        factory: Constructor of the failing model
        model: Name of the failing model

    Returns:
        list: A shorter diverging sequence
    """
    if len(ops) > MINIMIZE_LIMIT:
        return list(ops)
    current = list(ops)
    for index in range(len(current) - 2, -1, -1):
        candidate = current[:index] + current[index + 1:]
        if find_divergence(candidate, {model: factory}) is not None:
            current = candidate
    return current


def run_fuzz(config=None, factories=None):
    """
    Fuzz the memory models against the oracle.

    Args:
        config: FuzzConfig
        factories: Models to check (default: symmetric, asymmetric, attached)

    Returns:
        FuzzResult
    """
    config = (config or FuzzConfig()).validate()
    factories = factories if factories is not None else default_factories(config.params)
    ops = generate_ops(config)
    logger.info(f"Fuzzing {', '.join(factories)} with {len(ops)} ops (seed {config.seed})")

    divergence = find_divergence(ops, factories)
    if divergence is None:
        logger.info("No divergence from the oracle")
        return FuzzResult(config, len(ops))

    logger.error(f"Divergence: {divergence}")
    prefix = ops[:divergence.index + 1]
    reproduction = minimize(prefix, factories[divergence.model], divergence.model)
    return FuzzResult(config, divergence.index + 1, divergence, reproduction)
