"""
Deterministic write benchmark over the memory models.

Each run writes one byte value to pseudo-random addresses drawn from a
power-of-two range above a base address, times the writes, then reads every
address back. Addresses come from splitmix64, so everything in a report except
the elapsed time is reproducible bit for bit.
"""

import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields

from src.errors import InvalidParamsError, InvalidWorkloadError
from src.memory_models import MEMORY_KINDS, MemoryParams, make_memory

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15

DEFAULT_SEED = 0x5EED
SUITE_MODELS = ("symmetric", "asymmetric", "attached")
FOOTPRINT_NOTE = "Size is accounted allocation, not resident-set size."


def rng_next(state):
    """
    One splitmix64 step.

    Args:
        state: Unsigned 64-bit generator state

    Returns:
        tuple: (output, next state)
    """
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31), state


class SplitMix64:
    """Stateful wrapper around rng_next."""

    def __init__(self, seed=0):
        self.state = seed & MASK64

    def next(self):
        output, self.state = rng_next(self.state)
        return output

    def below(self, bound):
        """Output reduced modulo bound."""
        return self.next() % bound


@dataclass(frozen=True)
class WorkloadSpec:
    """
    Input of one benchmark row.

    Attributes:
        label: Benchmark column in reports ("low", "high" or a free label)
        model_kind: Memory kind to construct
        n_writes: Number of writes
        base_addr: First address of the range
        range_len: Size of the address range, a power of two
        value: Byte written at every address
        seed: splitmix64 seed
        addr_bits, page_bits, level_bits, flat_len: Memory model parameters
    """

    label: str = "custom"
    model_kind: str = "symmetric"
    n_writes: int = 20000
    base_addr: int = 0
    range_len: int = 1 << 24
    value: int = 1
    seed: int = DEFAULT_SEED
    addr_bits: int = 32
    page_bits: int = 12
    level_bits: int = 10
    flat_len: int = 1 << 24

    @property
    def params(self):
        return MemoryParams(self.addr_bits, self.page_bits, self.level_bits, self.flat_len)

    def validate(self):
        """Raise InvalidWorkloadError or InvalidParamsError when the spec is unusable."""
        if self.model_kind not in MEMORY_KINDS:
            raise InvalidWorkloadError(f"unknown model kind {self.model_kind!r}")
        if not isinstance(self.n_writes, int) or self.n_writes <= 0:
            raise InvalidWorkloadError(f"n_writes must be positive, got {self.n_writes}")
        if not isinstance(self.range_len, int) or self.range_len <= 0 or self.range_len & (self.range_len - 1):
            raise InvalidWorkloadError(f"range_len must be a positive power of two, got {self.range_len}")
        if not isinstance(self.value, int) or not 0 <= self.value <= 0xFF:
            raise InvalidWorkloadError(f"value must be a byte, got {self.value}")
        if not 0 <= self.seed <= MASK64:
            raise InvalidWorkloadError(f"seed must be an unsigned 64-bit value, got {self.seed}")
        if self.base_addr < 0:
            raise InvalidWorkloadError(f"base_addr must be non-negative, got {self.base_addr}")

        self.params.validate(self.model_kind)
        limit = self.params.address_limit(self.model_kind)
        if self.base_addr + self.range_len > limit:
            raise InvalidWorkloadError(
                f"range [{self.base_addr:#x}, {self.base_addr + self.range_len:#x}) "
                f"exceeds the {self.model_kind} address space")
        return self


def gen_addresses(spec):
    """
    Generate the workload's addresses.

    Args:
        spec: WorkloadSpec

    Returns:
        list: n_writes addresses; the k-th is base_addr + (k-th output mod range_len)
    """
    mask = spec.range_len - 1
    state = spec.seed
    addresses = []
    for _ in range(spec.n_writes):
        output, state = rng_next(state)
        addresses.append(spec.base_addr + (output & mask))
    return addresses


@dataclass(frozen=True)
class BenchReport:
    """Measured output of one benchmark row."""

    spec: WorkloadSpec
    elapsed_seconds: float
    footprint_bytes: int
    distinct_addresses: int
    verified: bool

    def to_dict(self):
        return {
            "spec": asdict(self.spec),
            "elapsed_seconds": self.elapsed_seconds,
            "footprint_bytes": self.footprint_bytes,
            "distinct_addresses": self.distinct_addresses,
            "verified": self.verified,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=False)

    @classmethod
    def from_json(cls, line):
        data = json.loads(line)
        return cls(
            spec=WorkloadSpec(**data["spec"]),
            elapsed_seconds=float(data["elapsed_seconds"]),
            footprint_bytes=int(data["footprint_bytes"]),
            distinct_addresses=int(data["distinct_addresses"]),
            verified=bool(data["verified"]),
        )

    def to_csv_row(self):
        row = {name: getattr(self.spec, name) for name in SPEC_FIELDS}
        row.update(
            elapsed_seconds=repr(self.elapsed_seconds),
            footprint_bytes=self.footprint_bytes,
            distinct_addresses=self.distinct_addresses,
            verified="true" if self.verified else "false",
        )
        return row

    @classmethod
    def from_csv_row(cls, row):
        spec_values = {}
        for spec_field in fields(WorkloadSpec):
            raw = row[spec_field.name]
            spec_values[spec_field.name] = raw if spec_field.name in ("label", "model_kind") else int(raw)
        return cls(
            spec=WorkloadSpec(**spec_values),
            elapsed_seconds=float(row["elapsed_seconds"]),
            footprint_bytes=int(row["footprint_bytes"]),
            distinct_addresses=int(row["distinct_addresses"]),
            verified=row["verified"] == "true",
        )

    def without_timing(self):
        """Everything except elapsed_seconds, for determinism comparisons."""
        data = self.to_dict()
        del data["elapsed_seconds"]
        return data


SPEC_FIELDS = tuple(f.name for f in fields(WorkloadSpec))
REPORT_FIELDS = ("elapsed_seconds", "footprint_bytes", "distinct_addresses", "verified")
CSV_FIELDS = SPEC_FIELDS + REPORT_FIELDS


def _timed_run(spec, addresses):
    memory = make_memory(spec.model_kind, spec.params)
    value = spec.value
    write = memory.write_byte

    start = time.perf_counter()
    for addr in addresses:
        write(addr, value)
    elapsed = time.perf_counter() - start

    read = memory.read_byte
    verified = all(read(addr) == value for addr in addresses)
    return elapsed, memory.footprint(), verified


def run_benchmark(spec, repeats=3, warmup=True):
    """
    Run one benchmark row.

    Construction and verification are outside the timed region. The best of
    `repeats` timed runs is reported, after one untimed warm-up run.

    Args:
        spec: WorkloadSpec
        repeats: Number of timed runs
        warmup: Whether to do a warm-up run first

    Returns:
        BenchReport
    """
    spec.validate()
    if repeats < 1:
        raise InvalidWorkloadError(f"repeats must be at least 1, got {repeats}")

    # Addresses are generated once and shared by every run
    addresses = gen_addresses(spec)
    distinct = len(set(addresses))
    if warmup:
        _timed_run(spec, addresses)

    # Timed runs; the footprint must not vary
    times = []
    footprints = set()
    verified = True
    for _ in range(repeats):
        elapsed, footprint, ok = _timed_run(spec, addresses)
        times.append(elapsed)
        footprints.add(footprint)
        verified = verified and ok
    assert len(footprints) == 1, f"footprint varied across runs: {sorted(footprints)}"

    # Best of the timed runs
    report = BenchReport(spec, min(times), footprints.pop(), distinct, verified)
    logger.debug(f"{spec.model_kind}/{spec.label} runs: {', '.join(f'{t:.4f}' for t in times)}")
    if not verified:
        logger.warning(f"Verification failed for {spec.model_kind}/{spec.label}")
    logger.info(f"{spec.model_kind} {spec.label}: {report.elapsed_seconds:.4f}s, "
                f"{report.footprint_bytes} bytes, {distinct} distinct addresses")
    return report


@dataclass(frozen=True)
class SuiteConfig:
    """Scale parameters of the six-row suite. Defaults are the desk-scale values."""

    n_writes: int = 20000
    range_len: int = 1 << 24
    high_base: int = 6 * (1 << 24)
    value: int = 1
    seed: int = DEFAULT_SEED
    addr_bits: int = 32
    page_bits: int = 12
    level_bits: int = 10
    flat_len: int = 1 << 24
    repeats: int = 3
    warmup: bool = True
    parallel: bool = False


def suite_specs(config):
    """The six WorkloadSpecs in table order: each model, low then high."""
    specs = []
    for kind in SUITE_MODELS:
        for label, base in (("low", 0), ("high", config.high_base)):
            specs.append(WorkloadSpec(
                label=label,
                model_kind=kind,
                n_writes=config.n_writes,
                base_addr=base,
                range_len=config.range_len,
                value=config.value,
                seed=config.seed,
                addr_bits=config.addr_bits,
                page_bits=config.page_bits,
                level_bits=config.level_bits,
                flat_len=config.flat_len,
            ))
    return specs


def run_suite(config=None):
    """
    Run the six-row suite.

    Rows run one after another unless config.parallel is set, in which case
    each row runs on its own thread with its own model instances.

    Args:
        config: SuiteConfig

    Returns:
        list: Six BenchReports in table order
    """
    config = config or SuiteConfig()
    specs = [spec.validate() for spec in suite_specs(config)]
    logger.info(f"Running suite: {config.n_writes} writes per row, range {config.range_len:#x}, "
                f"{'parallel' if config.parallel else 'sequential'}")

    def run(spec):
        return run_benchmark(spec, repeats=config.repeats, warmup=config.warmup)

    if config.parallel:
        with ThreadPoolExecutor(max_workers=len(specs)) as pool:
            reports = list(pool.map(run, specs))
    else:
        reports = [run(spec) for spec in specs]

    for line in format_table(reports).splitlines():
        logger.info(line)
    return reports


# Report formats

def format_table(reports):
    """Human-readable table: Memory | Benchmark | Time (secs) | Size (bytes)."""
    header = ("Memory", "Benchmark", "Time (secs)", "Size (bytes)")
    rows = [(r.spec.model_kind, r.spec.label, f"{r.elapsed_seconds:.2f}", str(r.footprint_bytes))
            for r in reports]
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]

    def line(cells):
        return " | ".join(cell.rjust(width) if i >= 2 else cell.ljust(width)
                          for i, (cell, width) in enumerate(zip(cells, widths)))

    out = [line(header), "-+-".join("-" * width for width in widths)]
    out.extend(line(row) for row in rows)
    out.append(FOOTPRINT_NOTE)
    return "\n".join(out)


def format_csv(reports):
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for report in reports:
        writer.writerow(report.to_csv_row())
    return buffer.getvalue()


def parse_csv(text):
    return [BenchReport.from_csv_row(row) for row in csv.DictReader(io.StringIO(text))]


def format_json_lines(reports):
    return "".join(report.to_json() + "\n" for report in reports)


def parse_json_lines(text):
    return [BenchReport.from_json(line) for line in text.splitlines() if line.strip()]


FORMATTERS = {
    "table": format_table,
    "csv": format_csv,
    "json": format_json_lines,
}


def format_reports(reports, fmt):
    try:
        formatter = FORMATTERS[fmt]
    except KeyError:
        raise InvalidParamsError(f"unknown report format {fmt!r}") from None
    return formatter(reports)
