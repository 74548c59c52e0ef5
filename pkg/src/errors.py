"""
Exception hierarchy for attachable state objects.

Every error raised by the library derives from AttachError. Errors raised while
a book is loading are stamped with the book path and line of the event that
caused them.
"""


class AttachError(Exception):
    """Base class for all library errors."""

    def __init__(self, message):
        super().__init__(message)
        self.message = message
        self.book = None
        self.line = None

    def with_provenance(self, book, line):
        """
        Record where in a book this error happened.

        Only the innermost location is kept, so an error raised inside an
        included book keeps pointing at that book.

        Args:
            book: Normalized book path
            line: 1-based line number of the offending event

        Returns:
            AttachError: self, for use in a raise statement
        """
        if self.book is None:
            self.book = book
            self.line = line
        return self

    def __str__(self):
        if self.book is not None:
            return f"{self.book}:{self.line}: {type(self).__name__}: {self.message}"
        return self.message


class ConfigError(ValueError):
    """Invalid configuration value."""


# Registry errors

class RegistryError(AttachError):
    """Base class for registry errors."""


class InvalidSpecError(RegistryError):
    """An object specification is malformed."""


class StAlreadyDefinedError(RegistryError):
    """An attachment names an attachable object that is already defined."""


class ImplUndefinedError(RegistryError):
    """An attachment names an implementation that is not defined yet."""


class DuplicateAttachmentError(RegistryError):
    """The attachable name already has a pending attachment."""


class AlreadyDefinedError(RegistryError):
    """An object with this name is already defined."""


class SignatureMismatchError(RegistryError):
    """Attachable and implementation objects disagree on their logic signature."""

    def __init__(self, message, mismatch):
        super().__init__(message)
        self.mismatch = mismatch


class PendingAttachmentOnNonAttachableError(RegistryError):
    """A name with a pending attachment was defined without attachable=True."""


class UndefinedError(RegistryError):
    """The named object is not defined."""


class UndefinedChildError(RegistryError):
    """A child object is not defined at the parent's definition time."""


class AlreadyGlobalError(RegistryError):
    """The object already has a live global instance."""


class AttachmentCycleError(RegistryError):
    """Attachment resolution revisited a name."""


# Loader errors

class LoaderError(AttachError):
    """Base class for book loading errors."""


class BookSyntaxError(LoaderError):
    """A book script could not be parsed."""

    def __init__(self, message, line, column, path=None):
        super().__init__(message)
        self.column = column
        self.book = path
        self.line = line

    def __str__(self):
        where = self.book or "<book>"
        return f"{where}:{self.line}:{self.column}: {self.message}"


class BookNotFoundError(LoaderError):
    """An included book does not exist."""


class CacheWithoutFunctionError(LoaderError):
    """A cache entry does not follow a defun of the same function in its book."""


class IncludeCycleError(LoaderError):
    """A book includes itself, directly or transitively."""


class UnknownFunctionError(LoaderError):
    """The function was never introduced by a defun event."""


class UnknownPrimitiveError(LoaderError):
    """A defun calls an export its object does not have."""


# Memory model errors

class MemoryModelError(AttachError):
    """Base class for memory model errors."""


class AddressOutOfRangeError(MemoryModelError):
    """The address does not fit the model's address space."""


class InvalidByteError(MemoryModelError):
    """A written value is not a byte."""


class InvalidParamsError(MemoryModelError):
    """Memory model parameters are invalid for the requested kind."""


# Benchmark errors

class BenchError(AttachError):
    """Base class for benchmark errors."""


class InvalidWorkloadError(BenchError):
    """A workload specification violates its invariants."""
