"""Exception hierarchy shared by every bitscan module."""

from __future__ import annotations


class BitscanError(Exception):
    """Base class for all errors raised by bitscan."""


class DimensionMismatch(BitscanError, ValueError):
    def __init__(self, found: int, expected: int):
        self.found = found
        self.expected = expected
        super().__init__(f"dimension mismatch: found {found}, expected {expected}")


class NonFiniteValue(BitscanError, ValueError):
    def __init__(self, index: int):
        self.index = index
        super().__init__(f"non-finite value at index {index}")


class ZeroNorm(BitscanError, ValueError):
    def __init__(self, which: str):
        self.which = which
        super().__init__(f"zero-norm vector: {which}")


class EmptyCorpus(BitscanError, ValueError):
    pass


class EmptySamples(BitscanError, ValueError):
    pass


class InvalidParams(BitscanError, ValueError):
    pass


class QueryMismatch(BitscanError, ValueError):
    def __init__(self, left: str, right: str):
        self.left = left
        self.right = right
        super().__init__(f"ranked lists belong to different queries: {left!r} vs {right!r}")


class NameConflict(BitscanError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"namespace already exists: {name!r}")

    def __str__(self) -> str:
        return self.args[0]


class UnknownNamespace(BitscanError, KeyError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unknown namespace: {name!r}")

    def __str__(self) -> str:
        return self.args[0]


class DuplicateDocId(BitscanError, KeyError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"doc_id already live: {doc_id!r}")

    def __str__(self) -> str:
        return self.args[0]


class UnknownDocId(BitscanError, KeyError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"unknown doc_id: {doc_id!r}")

    def __str__(self) -> str:
        return self.args[0]


class MalformedLine(BitscanError, ValueError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class InconsistentDim(BitscanError, ValueError):
    def __init__(self, line_no: int, found: int, expected: int):
        self.line_no = line_no
        self.found = found
        self.expected = expected
        super().__init__(f"line {line_no}: vector has dim {found}, expected {expected}")


class DuplicateQrel(BitscanError, ValueError):
    def __init__(self, qid: str, doc_id: str):
        self.qid = qid
        self.doc_id = doc_id
        super().__init__(f"duplicate judgment for ({qid!r}, {doc_id!r})")


class ChecksumMismatch(BitscanError, ValueError):
    pass


class UnsupportedVersion(BitscanError, ValueError):
    pass
