import textwrap

from loguru import logger

from overlapkit.config import EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR, EXIT_NUMERICAL_ERROR
from overlapkit.core.errors import DomainError, InputError, NumericalError
from overlapkit.utils.converters import ConversionError


def handle_error(command: str, exception: BaseException) -> int:
    """
    Log an exception raised while running `command` and return the exit code for it.

    The error handle order is as follows:
    1. `ConversionError`: a flag or scenario value couldn't be converted, input error
    2. `DomainError`: an argument is outside its allowed range, input error
    3. `InputError`: bad file, columns, cells or group sizes, input error
    4. `NumericalError`: degenerate covariance or failed factorization, numerical error
    5. Otherwise, the exception wasn't expected, it's logged with its traceback as an internal error
    """
    if isinstance(exception, ConversionError):
        return handle_input_error(command, exception, "Invalid value")
    elif isinstance(exception, DomainError):
        return handle_input_error(command, exception, f"Invalid `{exception.name}`")
    elif isinstance(exception, InputError):
        return handle_input_error(command, exception, "Invalid input")
    elif isinstance(exception, NumericalError):
        return handle_numerical_error(command, exception)

    return handle_unhandled_error(command, exception)


def handle_input_error(command: str, exception: InputError, title: str) -> int:
    logger.error(f"{title} for `{command}`: {exception}")
    return EXIT_INPUT_ERROR


def handle_numerical_error(command: str, exception: NumericalError) -> int:
    logger.error(
        textwrap.dedent(
            f"""
            `{command}` stopped on a numerical problem: {exception}
            This usually means the bootstrap replicates carry no variability (constant or tiny groups).
            """
        ).strip()
    )
    return EXIT_NUMERICAL_ERROR


def handle_unhandled_error(command: str, exception: BaseException) -> int:
    logger.opt(exception=exception).error(
        f"Unhandled exception {exception.__class__.__name__} in `{command}`: {exception}"
    )
    return EXIT_INTERNAL_ERROR
