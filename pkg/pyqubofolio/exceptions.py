"""Customized PyQuboFolio exceptions."""
from __future__ import annotations

from typing import Generator, Sequence


class MissingColumnError(Exception):
    """Exception raised when a required column is missing from a table.

    Parameters
    ----------
    missing : list
        List of missing columns.
    """

    def __init__(self, missing: list[str]) -> None:
        self.message = f"The following columns are missing:\n{', '.join(missing)}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class DataParseError(Exception):
    """Exception raised when a row of an input file cannot be parsed.

    Parameters
    ----------
    line : int, optional
        One-based line number of the offending row in the file.
    reason : str
        What went wrong.
    """

    def __init__(self, line: int | None, reason: str) -> None:
        self.line = line
        where = "Input file" if line is None else f"Line {line}"
        self.message = f"{where} could not be parsed: {reason}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class NonPositivePriceError(ValueError):
    """Exception raised when a price is zero or negative.

    Parameters
    ----------
    asset : str
        Asset identifier.
    date : str
        Date of the offending price.
    """

    def __init__(self, asset: str, date: str) -> None:
        self.asset = asset
        self.date = date
        self.message = f"Price of {asset} on {date} is not strictly positive."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InsufficientDataError(ValueError):
    """Exception raised when there are not enough observations.

    Parameters
    ----------
    what : str
        Name of the quantity that is too short.
    needed : int
        Minimum required count.
    given : int
        Available count.
    """

    def __init__(self, what: str, needed: int, given: int) -> None:
        self.message = f"At least {needed} {what} are required, got {given}."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class AlignmentError(ValueError):
    """Exception raised when series do not share the same index or length.

    Parameters
    ----------
    reason : str
        Description of the mismatch.
    """

    def __init__(self, reason: str) -> None:
        self.message = f"Inputs are not aligned: {reason}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class DimensionMismatchError(ValueError):
    """Exception raised when an array does not have the expected size.

    Parameters
    ----------
    name : str
        Name of the argument.
    expected : int or tuple
        Expected size or shape.
    given : int or tuple
        Given size or shape.
    """

    def __init__(
        self, name: str, expected: int | tuple[int, ...], given: int | tuple[int, ...]
    ) -> None:
        self.message = f"Size of {name} should be {expected}, got {given}."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class EmptyUniverseError(Exception):
    """Exception raised when the risk filter removes every asset.

    Parameters
    ----------
    label : str, optional
        Name of the risk package, defaults to None.
    """

    def __init__(self, label: str | None = None) -> None:
        self.label = label
        self.message = "No asset is left after applying the risk cap"
        self.message += "." if label is None else f" of package {label}."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class EmptyPoolError(Exception):
    """Exception raised when ranking a sample pool without entries."""

    def __init__(self) -> None:
        self.message = "The sample pool has no entries."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class OracleSizeError(Exception):
    """Exception raised when exhaustive enumeration is requested for a large problem.

    Parameters
    ----------
    n_bits : int
        Number of binary variables of the problem.
    limit : int
        Largest number of variables that is enumerated.
    """

    def __init__(self, n_bits: int, limit: int) -> None:
        self.message = f"Exhaustive search is limited to {limit} bits, the problem has {n_bits}."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class ConfigError(Exception):
    """Exception raised for an invalid run configuration field.

    Parameters
    ----------
    field : str
        Name of the configuration field.
    reason : str
        Why the value is rejected.
    """

    def __init__(self, field: str, reason: str) -> None:
        self.field = field
        self.message = f"Invalid configuration field ``{field}``: {reason}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InputValueError(Exception):
    """Exception raised for invalid input.

    Parameters
    ----------
    inp : str
        Name of the input parameter
    valid_inputs : tuple
        List of valid inputs
    given : str, optional
        The given input, defaults to None.
    """

    def __init__(
        self,
        inp: str,
        valid_inputs: Sequence[str | int] | Generator[str | int, None, None],
        given: str | int | None = None,
    ) -> None:
        if given is None:
            self.message = f"Given {inp} is invalid. Valid options are:\n"
        else:
            self.message = f"Given {inp} ({given}) is invalid. Valid options are:\n"
        self.message += "\n".join(str(i) for i in valid_inputs)
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InputRangeError(Exception):
    """Exception raised when a function argument is not in the valid range.

    Parameters
    ----------
    variable : str
        Variable with invalid value
    valid_range : str
        Valid range
    """

    def __init__(self, variable: str, valid_range: str) -> None:
        self.message = f"Valid range for {variable} is {valid_range}."
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message


class InputTypeError(Exception):
    """Exception raised when a function argument type is invalid.

    Parameters
    ----------
    arg : str
        Name of the function argument
    valid_type : str
        The valid type of the argument
    example : str, optional
        An example of a valid form of the argument, defaults to None.
    """

    def __init__(self, arg: str, valid_type: str, example: str | None = None) -> None:
        self.message = f"The {arg} argument should be of type {valid_type}"
        if example is not None:
            self.message += f":\n{example}"
        super().__init__(self.message)

    def __str__(self) -> str:
        return self.message
