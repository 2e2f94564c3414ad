import sys

from dishka import make_container

from msa_lab.application.exceptions import ApplicationError
from msa_lab.config import RuntimeConfig
from msa_lab.ioc import AppProvider
from msa_lab.logger import setup_package_logger
from msa_lab.presentation.cli import build_parser, list_experiments, run_experiment
from msa_lab.presentation.exceptions import EXIT_FAILURE, EXIT_OK, exit_code_for


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exited:
        return EXIT_OK if exited.code in (0, None) else EXIT_FAILURE
    if args.command == "list":
        return list_experiments()

    try:
        runtime = RuntimeConfig.from_environ()
    except ApplicationError as error:
        print(error.message, file=sys.stderr)
        return EXIT_FAILURE
    if args.workers is not None:
        runtime = runtime.model_copy(update={"workers": max(1, args.workers)})
    setup_package_logger(runtime)

    container = make_container(AppProvider(), context={RuntimeConfig: runtime})
    try:
        return run_experiment(args, container)
    except Exception as error:
        return exit_code_for(error)
    finally:
        container.close()


if __name__ == "__main__":
    sys.exit(main())
