"""Exception types shared across the package."""


class OntopathError(Exception):
    """Base class for all errors raised by this package."""


class InputSyntaxError(OntopathError):
    """A document failed to parse. Carries a 1-based line/column position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class TBoxSyntaxError(InputSyntaxError):
    pass


class QuerySyntaxError(InputSyntaxError):
    pass


class GraphFormatError(InputSyntaxError):
    pass


class FragmentViolation(OntopathError):
    """An axiom uses a construct outside the supported ontology fragment."""

    def __init__(self, message, axiom=None, construct=None):
        self.axiom = axiom
        self.construct = construct
        if axiom is not None:
            message = f"{message} [axiom: {axiom}]"
        super().__init__(message)


class BudgetExceededError(OntopathError):
    """A rewriting resource cap was hit; the partial result is withheld."""


class UnsupportedPathError(OntopathError):
    """A path expression falls outside the Cypher-emittable fragment."""
