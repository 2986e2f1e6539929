"""Exception types shared across the package."""


class PolicyError(Exception):
    """Base class for all policy-model errors."""


class DuplicateName(PolicyError):
    pass


class KindMismatch(PolicyError):
    pass


class UnknownVertex(PolicyError):
    pass


class UnknownEdge(PolicyError):
    pass


class EmptyPermissions(PolicyError):
    pass


class UnknownPermission(PolicyError):
    pass


class CycleDetected(PolicyError):
    pass


class ConfigInvalid(PolicyError):
    pass


class InsufficientEntities(PolicyError):
    pass


class ParseError(PolicyError):
    pass


class SchemaError(PolicyError):
    """Structurally invalid document; the message names the offending field path."""


class UnresolvedReference(PolicyError):
    pass


class UnknownAction(PolicyError):
    pass


class GroundTruthMismatch(PolicyError):
    pass


class DegenerateInput(PolicyError):
    pass
