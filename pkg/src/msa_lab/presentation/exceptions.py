import logging

from msa_lab.application.exceptions import ApplicationError, ConfigurationError, OutputError
from msa_lab.domain.exceptions import DomainError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BOUND_VIOLATED = 2


class BoundViolatedError(ApplicationError):
    def __init__(self, count: int):
        super().__init__(message=f"{count} records violate their bound")


class ExitCodeFactory:
    def __init__(self, exit_code: int):
        self.exit_code = exit_code

    def __call__(self, exception: Exception) -> int:
        message = getattr(exception, "message", None) or str(exception) or type(exception).__name__
        logger.error("%s: %s", type(exception).__name__, message)
        return self.exit_code


EXCEPTION_EXIT_CODES: tuple[tuple[type[Exception], ExitCodeFactory], ...] = (
    (BoundViolatedError, ExitCodeFactory(EXIT_BOUND_VIOLATED)),
    (ConfigurationError, ExitCodeFactory(EXIT_FAILURE)),
    (OutputError, ExitCodeFactory(EXIT_FAILURE)),
    (DomainError, ExitCodeFactory(EXIT_FAILURE)),
    (ApplicationError, ExitCodeFactory(EXIT_FAILURE)),
)


def exit_code_for(exception: Exception) -> int:
    for exception_type, factory in EXCEPTION_EXIT_CODES:
        if isinstance(exception, exception_type):
            return factory(exception)
    raise exception
