EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REMOTE = 3
EXIT_INTERNAL = 4


class HccError(Exception):
    exit_code: int = EXIT_INTERNAL


class UsageError(HccError):
    exit_code = EXIT_USAGE


class InternalError(HccError):
    exit_code = EXIT_INTERNAL


# Data / config errors

class DataError(HccError):
    exit_code = EXIT_DATA


class ArgumentError(DataError, ValueError):
    pass


class DimensionError(DataError, ValueError):
    def __init__(self, op: str, *shapes: tuple):
        self.op = op
        self.shapes = shapes
        rendered = " and ".join(str(tuple(s)) for s in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")


class LabelError(DataError, ValueError):
    pass


class DeterminismError(DataError):
    pass


class LexError(DataError):
    def __init__(self, message: str, offset: int):
        self.message = message
        self.offset = offset
        super().__init__(f"{message} at byte offset {offset}")


class VocabularyError(DataError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class CorpusParseError(DataError):
    def __init__(self, path: str, line: int, reason: str):
        self.line = line
        super().__init__(f"{path}: line {line}: cannot parse JSON ({reason})")


class CorpusSchemaError(DataError):
    def __init__(self, path: str, line: int, reason: str):
        self.line = line
        super().__init__(f"{path}: line {line}: {reason}")


class ConfigParseError(DataError):
    pass


class ConfigSchemaError(DataError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"unknown configuration key '{key}'")


class ConfigTypeError(DataError):
    def __init__(self, key: str, reason: str):
        self.key = key
        super().__init__(f"invalid value for '{key}': {reason}")


class EmptyEvaluationError(DataError):
    pass


class ClockError(DataError):
    pass


class ScheduleError(DataError):
    pass


class TrainingDivergenceError(DataError):
    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"non-finite gradient in parameter '{parameter}'")


class CheckpointFormatError(DataError):
    pass


class CheckpointVersionError(DataError):
    pass


class CheckpointCorruptionError(DataError):
    pass


# Remote backend errors

class RemoteError(HccError):
    exit_code = EXIT_REMOTE


class RemoteTimeoutError(RemoteError):
    pass


class RemoteStatusError(RemoteError):
    def __init__(self, status_code: int, body: str = ""):
        self.status_code = status_code
        super().__init__(f"remote backend returned status {status_code}: {body[:200]}")


class RemoteProtocolError(RemoteError):
    pass
