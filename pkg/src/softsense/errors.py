"""Exception hierarchy; the CLI maps these onto exit codes."""


class SoftsenseError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SoftsenseError):
    """Invalid configuration: bad value, unknown key, inconsistent spec."""


class ShapeError(SoftsenseError):
    """Array shapes incompatible with the requested operation."""


class DataError(SoftsenseError):
    """Malformed or missing input data."""


class InsufficientDataError(DataError):
    """Too few samples for the requested operation (e.g. SMOTE minority < 2)."""


class StratificationError(DataError):
    """A stratified class has fewer samples than the number of split parts."""


class NumericError(SoftsenseError):
    """Non-finite value encountered in a numeric routine."""


class NumericDivergenceError(NumericError):
    """Training produced a non-finite loss; carries epoch and batch index."""

    def __init__(self, message: str, epoch: int, batch: int):
        super().__init__(f"{message} (epoch {epoch}, batch {batch})")
        self.epoch = epoch
        self.batch = batch
