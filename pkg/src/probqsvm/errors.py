"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI maps it to.
"""


class QsvmError(Exception):
    exit_code = 1


class InputError(QsvmError, ValueError):
    exit_code = 2


class ConfigError(QsvmError, ValueError):
    exit_code = 2


class ParseError(InputError):
    pass


class CapacityError(QsvmError):
    exit_code = 4


class IntegrityError(QsvmError):
    exit_code = 3


class ProvenanceError(IntegrityError):
    pass
