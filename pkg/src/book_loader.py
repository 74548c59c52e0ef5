"""
Book scripts: parsing, loading with include semantics, and dispatch tracing.

A book is a line-oriented definition file. Loading one applies its events in
order against a LoadContext: object definitions and attachments go to the
registry, functions get bound to the exec functions of the objects they
operate on, and cache entries shipped with the book are either honored or
ignored depending on whether the function's object is executed through an
attachment.

Grammar ('#' starts a comment, tokens are whitespace-separated):

    defimpl NAME foundation=FND prims=EXP:LOGIC:EXEC:ARITY[,...] [non-executable]
    defabs  NAME foundation=FND prims=EXP:LOGIC:EXEC:ARITY[,...] [attachable] [non-executable] [children=NAME,...]
    attach  ST IMPL
    include PATH
    defun   FNAME on=OBJNAME calls=EXP[,...]
    cache   FNAME exec=EXECOP[,...]
    invoke  FNAME
"""

import logging
import os
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from types import MappingProxyType

from src.errors import (
    AlreadyDefinedError,
    AttachError,
    BookNotFoundError,
    BookSyntaxError,
    CacheWithoutFunctionError,
    IncludeCycleError,
    InvalidSpecError,
    UnknownFunctionError,
    UnknownPrimitiveError,
)
from src.registry import AbstractObjectSpec, PrimitiveSig, RegistryState

logger = logging.getLogger(__name__)

TOKEN_RE = re.compile(r"\S+")


# Events. Line numbers are provenance only and do not take part in equality.

@dataclass(frozen=True)
class DefineObject:
    spec: AbstractObjectSpec
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Attach:
    st: str
    impl: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Include:
    path: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class DefineFunction:
    fname: str
    object: str
    calls: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class CacheEntry:
    fname: str
    exec_ops: tuple
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Invoke:
    fname: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Book:
    path: str
    events: tuple


@dataclass(frozen=True)
class TraceRecord:
    """One invocation: a function and the exec ops it is bound to, in call order."""

    fname: str
    exec_ops: tuple

    def __str__(self):
        return f"{self.fname} -> {','.join(self.exec_ops)}"


@dataclass(frozen=True)
class LoadContext:
    """
    Everything a session has loaded so far.

    Attributes:
        registry: RegistryState of defined objects and attachments
        function_bindings: fname -> tuple of exec op identifiers
        loaded_books: normalized paths of books loaded so far
        trace_log: TraceRecords in invocation order
        rebind_set: functions whose shipped caches must be ignored
        root: Directory book paths are normalized against
    """

    registry: RegistryState = field(default_factory=RegistryState)
    function_bindings: object = field(default_factory=lambda: MappingProxyType({}))
    loaded_books: frozenset = frozenset()
    trace_log: tuple = ()
    rebind_set: frozenset = frozenset()
    root: str = "."


def new_context(registry=None, root=None):
    """
    Create an empty load context.

    Args:
        registry: Starting RegistryState (default: empty)
        root: Directory top-level book paths are relative to (default: cwd)

    Returns:
        LoadContext
    """
    return LoadContext(
        registry=registry if registry is not None else RegistryState(),
        root=str(Path(root) if root is not None else Path.cwd()),
    )


# Parsing

class _Line:
    """Tokens of one book line with their 1-based columns."""

    def __init__(self, number, text, path):
        self.number = number
        self.path = path
        self.tokens = [(m.group(0), m.start() + 1) for m in TOKEN_RE.finditer(text)]

    def error(self, message, column=1):
        return BookSyntaxError(message, self.number, column, self.path)

    def end_column(self):
        if not self.tokens:
            return 1
        token, column = self.tokens[-1]
        return column + len(token)


def _split_list(value, line, column, what):
    items = value.split(",")
    if not value or any(not item for item in items):
        raise line.error(f"{what} must be a comma-separated list of nonempty names", column)
    return tuple(items)


def _parse_prims(value, line, column):
    primitives = []
    for item in _split_list(value, line, column, "prims"):
        parts = item.split(":")
        if len(parts) != 4:
            raise line.error(f"primitive {item!r} must look like EXP:LOGIC:EXEC:ARITY", column)
        export_name, logic_id, exec_id, arity = parts
        if not (arity.isascii() and arity.isdigit()):
            raise line.error(f"arity of {export_name!r} must be a non-negative integer", column)
        try:
            primitives.append(PrimitiveSig(export_name, logic_id, exec_id, int(arity)))
        except InvalidSpecError as e:
            raise line.error(e.message, column) from None
    return tuple(primitives)


def _parse_options(line, args, allowed_keys, allowed_flags):
    """Split directive arguments into key=value options and bare flags."""
    options = {}
    flags = set()
    for token, column in args:
        if "=" in token:
            key, value = token.split("=", 1)
            if key not in allowed_keys:
                raise line.error(f"unknown option {key!r}", column)
            if key in options:
                raise line.error(f"option {key!r} given twice", column)
            options[key] = (value, column)
        elif token in allowed_flags:
            if token in flags:
                raise line.error(f"flag {token!r} given twice", column)
            flags.add(token)
        else:
            raise line.error(f"unexpected token {token!r}", column)
    return options, flags


def _require(line, options, key):
    if key not in options:
        raise line.error(f"missing required option {key}=", line.end_column())
    return options[key]


def _expect_args(line, directive, args, count):
    if len(args) != count:
        column = args[count][1] if len(args) > count else line.end_column()
        raise line.error(f"{directive} takes {count} argument(s), got {len(args)}", column)


def _parse_define(line, directive, args):
    if not args:
        raise line.error(f"{directive} requires an object name", line.end_column())
    (name, name_column), rest = args[0], args[1:]
    if directive == "defimpl":
        options, flags = _parse_options(line, rest, {"foundation", "prims"}, {"non-executable"})
    else:
        options, flags = _parse_options(
            line, rest, {"foundation", "prims", "children"}, {"attachable", "non-executable"})

    foundation, _ = _require(line, options, "foundation")
    prims_value, prims_column = _require(line, options, "prims")
    primitives = _parse_prims(prims_value, line, prims_column)
    children = ()
    if "children" in options:
        children_value, children_column = options["children"]
        children = _split_list(children_value, line, children_column, "children")

    try:
        spec = AbstractObjectSpec(
            name=name,
            foundation=foundation,
            primitives=primitives,
            attachable="attachable" in flags,
            non_executable="non-executable" in flags,
            children=children,
        )
    except InvalidSpecError as e:
        raise line.error(e.message, name_column) from None
    return DefineObject(spec, line.number)


def _parse_defun(line, args):
    if not args:
        raise line.error("defun requires a function name", line.end_column())
    fname = args[0][0]
    options, _ = _parse_options(line, args[1:], {"on", "calls"}, set())
    obj, _ = _require(line, options, "on")
    calls_value, calls_column = _require(line, options, "calls")
    if not obj:
        raise line.error("on= requires an object name", line.end_column())
    calls = _split_list(calls_value, line, calls_column, "calls")
    return DefineFunction(fname, obj, calls, line.number)


def _parse_cache(line, args):
    if not args:
        raise line.error("cache requires a function name", line.end_column())
    fname = args[0][0]
    options, _ = _parse_options(line, args[1:], {"exec"}, set())
    exec_value, exec_column = _require(line, options, "exec")
    return CacheEntry(fname, _split_list(exec_value, line, exec_column, "exec"), line.number)


def _parse_line(line):
    (directive, column), args = line.tokens[0], line.tokens[1:]
    if directive in ("defimpl", "defabs"):
        return _parse_define(line, directive, args)
    if directive == "attach":
        _expect_args(line, directive, args, 2)
        return Attach(args[0][0], args[1][0], line.number)
    if directive == "include":
        _expect_args(line, directive, args, 1)
        return Include(args[0][0], line.number)
    if directive == "defun":
        return _parse_defun(line, args)
    if directive == "cache":
        return _parse_cache(line, args)
    if directive == "invoke":
        _expect_args(line, directive, args, 1)
        return Invoke(args[0][0], line.number)
    raise line.error(f"unknown directive {directive!r}", column)


def parse_book(text, path="<book>"):
    """
    Parse a book script.

    Args:
        text: Book contents, bytes (UTF-8) or str
        path: Path recorded on the Book and in syntax errors

    Returns:
        Book: Events in textual order
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as e:
            line = bytes(text)[:e.start].count(b"\n") + 1
            raise BookSyntaxError(f"book is not valid UTF-8: {e.reason}", line, 1, path) from None

    events = []
    # Only \n ends a line; other Unicode line breaks stay inside the line.
    for number, raw in enumerate(text.split("\n"), start=1):
        content = raw.removesuffix("\r").split("#", 1)[0]
        line = _Line(number, content, path)
        if line.tokens:
            events.append(_parse_line(line))
    return Book(path, tuple(events))


# Loading

class _LoadSession:
    """Mutable working copy of a LoadContext for the duration of one load."""

    def __init__(self, ctx):
        self.ctx = ctx
        self.root = Path(ctx.root)
        self.registry = ctx.registry
        self.function_bindings = dict(ctx.function_bindings)
        self.loaded_books = set(ctx.loaded_books)
        self.trace_log = list(ctx.trace_log)
        self.rebind_set = set(ctx.rebind_set)

    def freeze(self):
        return replace(
            self.ctx,
            registry=self.registry,
            function_bindings=MappingProxyType(dict(self.function_bindings)),
            loaded_books=frozenset(self.loaded_books),
            trace_log=tuple(self.trace_log),
            rebind_set=frozenset(self.rebind_set),
        )

    def book_key(self, file_path):
        """Normalized, root-relative identity of a book file."""
        return Path(os.path.relpath(os.path.normpath(file_path), self.root)).as_posix()

    def load(self, file_path, stack):
        # Cycle check before the already-loaded check
        key = self.book_key(file_path)
        if key in stack:
            cycle = " -> ".join(stack[stack.index(key):] + (key,))
            raise IncludeCycleError(f"include cycle: {cycle}")
        if key in self.loaded_books:
            logger.debug(f"Book {key} already loaded, skipping")
            return

        # Read and parse the whole book before applying anything
        try:
            text = Path(file_path).read_bytes()
        except FileNotFoundError:
            raise BookNotFoundError(f"book not found: {key}") from None

        book = parse_book(text, key)
        logger.info(f"Loading book {key} ({len(book.events)} events)")

        # Apply events in order; the first failure carries this book and line
        defined_here = set()
        for event in book.events:
            try:
                self.apply(event, Path(file_path).parent, stack + (key,), defined_here)
            except AttachError as e:
                raise e.with_provenance(key, event.line)
        self.loaded_books.add(key)

    def apply(self, event, book_dir, stack, defined_here):
        if isinstance(event, DefineObject):
            self.registry = self.registry.define_object(event.spec)
        elif isinstance(event, Attach):
            self.registry = self.registry.attach(event.st, event.impl)
        elif isinstance(event, Include):
            self.load(book_dir / event.path, stack)
        elif isinstance(event, DefineFunction):
            self.define_function(event)
            defined_here.add(event.fname)
        elif isinstance(event, CacheEntry):
            self.apply_cache(event, defined_here)
        elif isinstance(event, Invoke):
            self.trace_log.append(_trace(self.function_bindings, event.fname))
        else:
            raise TypeError(f"unknown book event {event!r}")

    def define_function(self, event):
        if event.fname in self.function_bindings:
            raise AlreadyDefinedError(f"function {event.fname} is already defined")
        spec = self.registry.defined.get(event.object)
        binding = self.registry.effective_binding(event.object)

        exec_ops = []
        for call in event.calls:
            index = spec.export_index(call)
            if index is None:
                raise UnknownPrimitiveError(f"{event.object} has no export named {call}")
            exec_ops.append(binding.effective_exec[index])

        self.function_bindings[event.fname] = tuple(exec_ops)
        if binding.attached:
            self.rebind_set.add(event.fname)
            logger.debug(f"{event.fname} operates on attached {event.object}; shipped cache will be ignored")

    def apply_cache(self, event, defined_here):
        if event.fname not in defined_here:
            raise CacheWithoutFunctionError(
                f"cache for {event.fname} does not follow its defun in the same book")
        if event.fname in self.rebind_set:
            logger.warning(f"Ignoring shipped cache for {event.fname}: rebound at include time")
            return
        self.function_bindings[event.fname] = event.exec_ops
        logger.debug(f"Using cache for {event.fname}: {','.join(event.exec_ops)}")


def _trace(function_bindings, fname):
    try:
        return TraceRecord(fname, function_bindings[fname])
    except KeyError:
        raise UnknownFunctionError(f"function {fname} is not defined") from None


def load_book(ctx, path):
    """
    Load a book and everything it includes.

    Books already loaded in this context are skipped, so including a book
    twice is a no-op. On error the passed context is left as it was.

    Args:
        ctx: LoadContext to load into
        path: Book path, relative to ctx.root unless absolute

    Returns:
        LoadContext: New context
    """
    session = _LoadSession(ctx)
    file_path = Path(path)
    if not file_path.is_absolute():
        file_path = session.root / file_path
    session.load(file_path, ())

    result = session.freeze()
    logger.info(f"Loaded {session.book_key(file_path)}: {len(result.function_bindings)} functions, "
                f"{len(result.rebind_set)} bound at include time")
    return result


def invoke(ctx, fname):
    """
    Record an invocation of a function. Tracing only; no object state changes.

    Args:
        ctx: LoadContext
        fname: Function introduced by a defun event

    Returns:
        tuple: (new LoadContext, TraceRecord)
    """
    record = _trace(ctx.function_bindings, fname)
    return replace(ctx, trace_log=ctx.trace_log + (record,)), record


class BookLoader:
    """Stateful convenience wrapper around a LoadContext."""

    def __init__(self, root=None, registry=None):
        """
        Initialize the loader.

        Args:
            root: Directory book paths are relative to (default: cwd)
            registry: Starting RegistryState (default: empty)
        """
        self.context = new_context(registry=registry, root=root)

    def load(self, path):
        """
        Load a book.

        Returns:
            list: TraceRecords produced by invoke events while loading
        """
        before = len(self.context.trace_log)
        self.context = load_book(self.context, path)
        return list(self.context.trace_log[before:])

    def invoke(self, fname):
        self.context, record = invoke(self.context, fname)
        return record

    def trace_lines(self):
        return [str(record) for record in self.context.trace_log]
