"""
Registry of abstract object specifications and their attachments.

The registry is the "world": it records which objects are defined, which
attachable names have a pending implementation, the effective execution binding
of every defined object, and the objects that have a live global instance.

A RegistryState is a value. Every operation returns a new state and leaves the
receiver untouched, which makes snapshots and rollback free. The global
instances themselves are ordinary mutable objects and are shared between a
state and its successors.
"""

import logging
import re
from dataclasses import dataclass, field, replace
from types import MappingProxyType

from src.errors import (
    AlreadyDefinedError,
    AlreadyGlobalError,
    AttachmentCycleError,
    DuplicateAttachmentError,
    ImplUndefinedError,
    InvalidSpecError,
    PendingAttachmentOnNonAttachableError,
    SignatureMismatchError,
    StAlreadyDefinedError,
    UndefinedChildError,
    UndefinedError,
)

logger = logging.getLogger(__name__)

# Identifiers are whitespace-free and avoid the book syntax's separators.
# Primitive fields also exclude ':', which separates them in a prims list.
IDENTIFIER_RE = re.compile(r"^[^\s,=#]+$")
PRIMITIVE_ID_RE = re.compile(r"^[^\s,=#:]+$")


def _check_identifier(value, what, pattern=IDENTIFIER_RE):
    if not isinstance(value, str) or not pattern.match(value):
        raise InvalidSpecError(f"{what} must be a nonempty identifier, got {value!r}")


def _frozen(mapping):
    return MappingProxyType(dict(mapping))


def _extended(mapping, key, value):
    updated = dict(mapping)
    updated[key] = value
    return MappingProxyType(updated)


@dataclass(frozen=True)
class PrimitiveSig:
    """One exported primitive: its export name, logic function, exec function and arity."""

    export_name: str
    logic_id: str
    exec_id: str
    arity: int

    def __post_init__(self):
        _check_identifier(self.export_name, "export_name", PRIMITIVE_ID_RE)
        _check_identifier(self.logic_id, "logic_id", PRIMITIVE_ID_RE)
        _check_identifier(self.exec_id, "exec_id", PRIMITIVE_ID_RE)
        if isinstance(self.arity, bool) or not isinstance(self.arity, int) or self.arity < 0:
            raise InvalidSpecError(f"arity of {self.export_name} must be a non-negative integer")


@dataclass(frozen=True)
class AbstractObjectSpec:
    """
    A named abstract object.

    Attributes:
        name: Object name
        foundation: Concrete backing the exec functions operate on
        primitives: Exported primitives, in order
        attachable: Whether a pending attachment may replace foundation and exec fields
        non_executable: Suppress creation of a global instance at definition time
        children: Names of child objects, in order
    """

    name: str
    foundation: str
    primitives: tuple = ()
    attachable: bool = False
    non_executable: bool = False
    children: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "primitives", tuple(self.primitives))
        object.__setattr__(self, "children", tuple(self.children))
        _check_identifier(self.name, "name")
        _check_identifier(self.foundation, "foundation")
        for child in self.children:
            _check_identifier(child, "child name")

        seen = set()
        for prim in self.primitives:
            if not isinstance(prim, PrimitiveSig):
                raise InvalidSpecError(f"{self.name}: primitives must be PrimitiveSig values")
            if prim.export_name in seen:
                raise InvalidSpecError(f"{self.name}: duplicate export {prim.export_name}")
            seen.add(prim.export_name)

    @property
    def logic_signature(self):
        """tuple: (logic_id, arity) pairs in primitive order."""
        return tuple((prim.logic_id, prim.arity) for prim in self.primitives)

    @property
    def exec_ids(self):
        return tuple(prim.exec_id for prim in self.primitives)

    def export_index(self, export_name):
        """Position of an export, or None when the object has no such export."""
        for index, prim in enumerate(self.primitives):
            if prim.export_name == export_name:
                return index
        return None


@dataclass(frozen=True)
class Own:
    """Provenance of a binding taken from the object's own spec."""

    def __str__(self):
        return "Own"


@dataclass(frozen=True)
class AttachedVia:
    """Provenance of a binding taken from an attached implementation."""

    chain: tuple

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        if not self.chain:
            raise InvalidSpecError("AttachedVia chain must be nonempty")

    def __str__(self):
        return f"AttachedVia({' -> '.join(self.chain)})"


OWN = Own()


@dataclass(frozen=True)
class ResolvedBinding:
    """The effective execution backing of a defined object."""

    name: str
    effective_foundation: str
    effective_exec: tuple
    provenance: object = OWN

    @property
    def attached(self):
        return isinstance(self.provenance, AttachedVia)


@dataclass(frozen=True)
class SignatureMismatch:
    """First position where two logic signatures differ. None on either side means the list ended."""

    position: int
    expected: object
    actual: object

    def __str__(self):
        def show(entry):
            return "<end>" if entry is None else f"{entry[0]}/{entry[1]}"

        return (f"logic signatures differ at position {self.position}: "
                f"expected {show(self.expected)}, got {show(self.actual)}")


def check_compatible(attachable, impl):
    """
    Compare the logic signatures of an attachable object and its implementation.

    Export names and exec functions may differ freely; only the ordered
    (logic_id, arity) pairs have to agree.

    Args:
        attachable: AbstractObjectSpec being defined
        impl: AbstractObjectSpec of the implementation

    Returns:
        SignatureMismatch or None: None when compatible
    """
    expected = attachable.logic_signature
    actual = impl.logic_signature
    for position in range(max(len(expected), len(actual))):
        left = expected[position] if position < len(expected) else None
        right = actual[position] if position < len(actual) else None
        if left != right:
            return SignatureMismatch(position, left, right)
    return None


@dataclass(frozen=True)
class ObjectInstance:
    """Global instance of an object whose foundation has no registered factory."""

    name: str
    binding: ResolvedBinding
    children: object = field(default_factory=lambda: MappingProxyType({}))


@dataclass(frozen=True)
class RegistryState:
    """
    The world of defined objects.

    Attributes:
        defined: name -> AbstractObjectSpec
        table: attachable name -> implementation name, in insertion order
        globals: names with a live global instance
        bindings: name -> ResolvedBinding
        instances: name -> global instance
        foundations: foundation name -> zero-argument factory for its backing
    """

    defined: object = field(default_factory=lambda: MappingProxyType({}))
    table: object = field(default_factory=lambda: MappingProxyType({}))
    globals: frozenset = frozenset()
    bindings: object = field(default_factory=lambda: MappingProxyType({}))
    instances: object = field(default_factory=lambda: MappingProxyType({}))
    foundations: object = field(default_factory=lambda: MappingProxyType({}))

    def is_defined(self, name):
        return name in self.defined

    def register_foundation(self, foundation, factory):
        """
        Register the constructor used for global instances backed by a foundation.

        Args:
            foundation: Foundation identifier
            factory: Callable with no arguments returning a fresh backing

        Returns:
            RegistryState: New state
        """
        _check_identifier(foundation, "foundation")
        return replace(self, foundations=_extended(self.foundations, foundation, factory))

    def attach(self, st, impl):
        """
        Record that impl will be attached to st when st is defined.

        Args:
            st: Attachable object name; must not be defined yet
            impl: Implementation object name; must already be defined

        Returns:
            RegistryState: New state with st -> impl in the table
        """
        _check_identifier(st, "attachable name")
        _check_identifier(impl, "implementation name")
        if self.is_defined(st):
            raise StAlreadyDefinedError(
                f"cannot attach to {st}: it is already defined; attach must precede its definition")
        if st in self.table:
            raise DuplicateAttachmentError(
                f"{st} already has a pending attachment to {self.table[st]}")
        if not self.is_defined(impl):
            raise ImplUndefinedError(
                f"cannot attach {impl} to {st}: {impl} is not defined yet")

        logger.info(f"Recorded attachment {st} -> {impl}")
        return replace(self, table=_extended(self.table, st, impl))

    def resolve_attachment(self, st, top=True):
        """
        Find the implementation that executes st.

        Follows the table until it reaches a name with no entry, since an
        implementation may itself have an attachment. A top-level call for a
        name with no entry returns None.

        Args:
            st: Name to resolve
            top: True for a top-level call

        Returns:
            str or None: The final implementation name
        """
        seen = {st}
        current = self.table.get(st)
        if current is None:
            return None if top else st

        while current in self.table:
            if current in seen:
                raise AttachmentCycleError(f"attachment table has a cycle through {current}")
            seen.add(current)
            current = self.table[current]
        return current

    def resolution_chain(self, st):
        """tuple: names visited after st while resolving it, ending with the implementation."""
        chain = []
        seen = {st}
        current = self.table.get(st)
        while current is not None:
            if current in seen:
                raise AttachmentCycleError(f"attachment table has a cycle through {current}")
            seen.add(current)
            chain.append(current)
            current = self.table.get(current)
        return tuple(chain)

    def define_object(self, spec):
        """
        Define an abstract object.

        When the object is attachable and has a pending attachment, its
        foundation and exec fields are replaced by those of the resolved
        implementation's binding, after checking that both share the same
        logic signature.

        Args:
            spec: AbstractObjectSpec to define

        Returns:
            RegistryState: New state
        """
        name = spec.name
        if self.is_defined(name):
            raise AlreadyDefinedError(f"{name} is already defined")
        for child in spec.children:
            if not self.is_defined(child):
                raise UndefinedChildError(f"child {child} of {name} is not defined")
        if name in self.table and not spec.attachable:
            raise PendingAttachmentOnNonAttachableError(
                f"{name} has a pending attachment to {self.table[name]} but is not attachable")

        binding = self._compute_binding(spec)
        state = replace(
            self,
            defined=_extended(self.defined, name, spec),
            bindings=_extended(self.bindings, name, binding),
        )
        logger.info(f"Defined {name} ({binding.provenance})")

        if not spec.non_executable:
            state = state._with_global(name)
        return state

    def _compute_binding(self, spec):
        impl_name = self.resolve_attachment(spec.name, top=True) if spec.attachable else None
        if impl_name is None:
            return ResolvedBinding(spec.name, spec.foundation, spec.exec_ids, OWN)

        if not self.is_defined(impl_name):
            raise ImplUndefinedError(f"implementation {impl_name} of {spec.name} is not defined")
        mismatch = check_compatible(spec, self.defined[impl_name])
        if mismatch is not None:
            raise SignatureMismatchError(
                f"cannot execute {spec.name} as {impl_name}: {mismatch}", mismatch)

        impl_binding = self.bindings[impl_name]
        chain = self.resolution_chain(spec.name)
        logger.debug(f"Resolved {spec.name} through {' -> '.join(chain)}")
        binding = ResolvedBinding(
            spec.name,
            impl_binding.effective_foundation,
            impl_binding.effective_exec,
            AttachedVia(chain),
        )
        assert len(binding.effective_exec) == len(spec.primitives)
        return binding

    def add_global_object(self, name):
        """
        Create the global instance of an object defined with non_executable.

        Args:
            name: Defined object name

        Returns:
            RegistryState: New state with name in globals
        """
        if not self.is_defined(name):
            raise UndefinedError(f"{name} is not defined")
        if name in self.globals:
            raise AlreadyGlobalError(f"{name} already has a global instance")
        return self._with_global(name)

    def _with_global(self, name):
        instance = self._instantiate(name)
        logger.debug(f"Created global instance of {name}")
        return replace(
            self,
            globals=self.globals | {name},
            instances=_extended(self.instances, name, instance),
        )

    def _instantiate(self, name):
        binding = self.bindings[name]
        factory = self.foundations.get(binding.effective_foundation)
        if factory is not None:
            return factory()

        children = {}
        for child in self.defined[name].children:
            existing = self.instances.get(child)
            children[child] = existing if existing is not None else self._instantiate(child)
        return ObjectInstance(name, binding, _frozen(children))

    def effective_binding(self, name):
        """
        Look up the effective binding of a defined object.

        Args:
            name: Defined object name

        Returns:
            ResolvedBinding: The binding computed when the object was defined
        """
        try:
            return self.bindings[name]
        except KeyError:
            raise UndefinedError(f"{name} is not defined") from None

    def child_bindings(self, name):
        """list: (child name, ResolvedBinding) pairs of a defined object's children, in order."""
        if not self.is_defined(name):
            raise UndefinedError(f"{name} is not defined")
        return [(child, self.bindings[child]) for child in self.defined[name].children]

    def global_instance(self, name):
        """Return the live global instance of an object."""
        if not self.is_defined(name):
            raise UndefinedError(f"{name} is not defined")
        if name not in self.globals:
            raise UndefinedError(f"{name} has no global instance")
        return self.instances[name]


def empty_registry():
    return RegistryState()


def attach(state, st, impl):
    return state.attach(st, impl)


def resolve_attachment(state, st, top=True):
    return state.resolve_attachment(st, top)


def define_object(state, spec):
    return state.define_object(spec)


def add_global_object(state, name):
    return state.add_global_object(name)


def effective_binding(state, name):
    return state.effective_binding(name)
