"""Exception types shared across the package."""


class VandalScoreError(Exception):
    """Base class for all package errors."""


class MalformedXml(VandalScoreError):
    pass


class MissingField(VandalScoreError):
    pass


class BadRecord(VandalScoreError):
    pass


class MalformedEntityJson(VandalScoreError):
    pass


class InsufficientData(VandalScoreError):
    pass


class EmptyStream(VandalScoreError):
    pass


class UnknownVariable(VandalScoreError):
    pass


class SchemaMismatch(VandalScoreError):
    pass


class CorruptState(VandalScoreError):
    pass


class CorruptModel(VandalScoreError):
    pass


class DegenerateLabels(VandalScoreError):
    pass


class SingleClass(VandalScoreError):
    pass


class NoPositives(VandalScoreError):
    pass


class BadConfig(VandalScoreError):
    pass


class ProtocolViolation(VandalScoreError):
    pass


class ConnectionLost(VandalScoreError):
    pass


class ClientMisbehavior(VandalScoreError):
    pass
