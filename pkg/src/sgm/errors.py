"""Exception hierarchy shared by all sgm modules."""


class SGMError(Exception):
    """Base class for every error raised by this package."""


class NotChordal(SGMError):
    pass


class EdgeAbsent(SGMError):
    pass


class SetsOverlap(SGMError):
    pass


class ContextKeysMismatch(SGMError):
    pass


class EmptyConditioningSet(SGMError):
    pass


class ZeroCell(SGMError):
    pass


class SupportMismatch(SGMError):
    pass


class EmptyBlock(SGMError):
    pass


class NoStrataPossible(SGMError):
    pass


class SchemaError(SGMError):
    """Malformed model or table file.

    ``pointer`` is a JSON pointer to the offending location.
    """

    def __init__(self, message, pointer=""):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


class ParseError(SGMError):
    def __init__(self, message, line, col=None):
        where = f"line {line}" if col is None else f"line {line}, column {col}"
        super().__init__(f"{where}: {message}")
        self.line = line
        self.col = col


class DomainError(ParseError):
    pass


class NotConverged(SGMError):
    """Cyclical projection hit ``max_cycles`` before meeting ``eps``.

    The partially fitted table and the convergence report are attached so
    callers can inspect or salvage them.
    """

    def __init__(self, table, report):
        super().__init__(
            f"no convergence after {report.cycles} cycles "
            f"(last change {report.final_change:.3e})"
        )
        self.table = table
        self.report = report
