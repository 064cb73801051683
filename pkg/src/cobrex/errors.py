"""Exception hierarchy shared by every cobrex module."""


class CobrexError(Exception):
    """Base class for all toolchain errors."""


class CobolSyntaxError(CobrexError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


class MissingCopybook(CobrexError):
    def __init__(self, name: str):
        super().__init__(f"copybook not found: {name}")
        self.name = name


class DuplicateDataItem(CobrexError):
    def __init__(self, name: str, qualified_path: str):
        super().__init__(f"duplicate sibling data item {name} at {qualified_path}")
        self.name = name
        self.qualified_path = qualified_path


class UnresolvedName(CobrexError):
    def __init__(self, identifier: str, line: int):
        super().__init__(f"line {line}: cannot resolve {identifier}")
        self.identifier = identifier
        self.line = line


class MapSyntaxError(CobrexError):
    def __init__(self, line: int, message: str):
        super().__init__(f"map line {line}: {message}")
        self.line = line
        self.message = message


class UnknownParagraph(CobrexError):
    def __init__(self, name: str, line: int):
        super().__init__(f"line {line}: unknown paragraph {name}")
        self.name = name
        self.line = line


class UnknownTransactionProgram(CobrexError):
    def __init__(self, txn_id: str, program: str):
        super().__init__(f"transaction {txn_id} names absent program {program}")
        self.txn_id = txn_id
        self.program = program


class NoDataAccess(CobrexError):
    def __init__(self, program: str):
        super().__init__(f"program {program} has no SQL statements")
        self.program = program


class NonTerminatingFixpoint(CobrexError):
    """Internal assertion: a monotone fixpoint over finite sets exceeded its bound."""


class PathBudgetExceeded(CobrexError):
    def __init__(self, paths_explored: int):
        super().__init__(f"path budget exceeded after {paths_explored} paths")
        self.paths_explored = paths_explored


class MissingCallee(CobrexError):
    def __init__(self, name: str):
        super().__init__(f"called program not in workspace: {name}")
        self.name = name


class BindingMismatch(CobrexError):
    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class EmptySlice(CobrexError):
    def __init__(self, copybook: str, role: str):
        super().__init__(f"no {role} field falls inside copybook {copybook}")
        self.copybook = copybook
        self.role = role


class InvalidRegion(CobrexError):
    def __init__(self, message: str):
        super().__init__(message)
