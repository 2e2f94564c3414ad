import logging
from logging import FileHandler

from msa_lab.config import RuntimeConfig


class OverWritingFileHandler(FileHandler):
    """Log file that starts over once it grows past max_bytes."""

    def __init__(self, filename, max_bytes):
        super().__init__(filename=filename, mode="w", encoding="utf-8")
        self.max_bytes = max_bytes

    def emit(self, record):
        if self.stream is not None and self.stream.tell() >= self.max_bytes:
            self.stream.seek(0)
            self.stream.truncate()
        super().emit(record=record)


def setup_package_logger(runtime: RuntimeConfig) -> None:
    logging.basicConfig(
        level=runtime.log_level.upper(),
        format="%(levelname)s - %(asctime)s - [%(name)s] - %(message)s",
        datefmt="%Y-%m-%d %H:%M",
        handlers=[
            OverWritingFileHandler(filename=runtime.log_file, max_bytes=runtime.log_max_bytes),
            logging.StreamHandler(),
        ],
        force=True,
    )
