import csv
import json
import logging
from collections.abc import Mapping, Sequence
from enum import Enum
from pathlib import Path

import numpy as np

from msa_lab.application.exceptions import OutputError
from msa_lab.domain.operators import HamiltonianMatrix

logger = logging.getLogger(__name__)


class OutputFormat(Enum):
    CSV = "csv"
    JSONL = "jsonl"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


class CsvResultWriter:
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)

    def write(self, records: Sequence[Mapping], path: Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as stream:
            writer = csv.writer(stream)
            writer.writerow(self.columns)
            for record in records:
                writer.writerow([_cell(record.get(column)) for column in self.columns])


class JsonLinesResultWriter:
    def write(self, records: Sequence[Mapping], path: Path) -> None:
        with open(path, "w", encoding="utf-8") as stream:
            for record in records:
                stream.write(json.dumps(record, sort_keys=True, default=str, allow_nan=False) + "\n")


class ResultEmitter:
    def __init__(self, columns: Sequence[str]):
        self.writers = {OutputFormat.CSV: CsvResultWriter(columns), OutputFormat.JSONL: JsonLinesResultWriter()}

    def emit(self, records: Sequence[Mapping], fmt: str, path: str | Path) -> None:
        emit_results(records, fmt, path, self.writers)


def emit_results(records: Sequence[Mapping], fmt: str, path: str | Path, writers: Mapping) -> None:
    target = Path(path)
    try:
        writer = writers[OutputFormat(fmt)]
    except ValueError:
        raise OutputError(target, f"unknown format {fmt!r}") from None
    try:
        target.parent.mkdir(parents=True, exist_ok=True)
        writer.write(records, target)
    except OSError as error:
        logger.error("Writing %s records to %s failed: %s", len(records), target, error)
        raise OutputError(target, error.strerror or str(error)) from error
    logger.info("Wrote %s records to %s", len(records), target)


def write_matrix_dump(h: HamiltonianMatrix, path: str | Path) -> None:
    """Plain-text dump: basis header, then one `i j value` triplet per nonzero entry."""
    target = Path(path)
    try:
        with open(target, "w", encoding="utf-8") as stream:
            stream.write(f"# dimension {h.dimension}\n")
            stream.write("# basis " + " ".join(str(tuple(np.atleast_1d(site).tolist())) for site in h.basis) + "\n")
            for i, j, value in h.triplets():
                stream.write(f"{i} {j} {value!r}\n")
    except OSError as error:
        logger.error("Writing matrix dump to %s failed: %s", target, error)
        raise OutputError(target, error.strerror or str(error)) from error


class TripletMatrixDumper:
    def dump(self, h: HamiltonianMatrix, path: str | Path) -> None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        write_matrix_dump(h, path)
        logger.info("Dumped %sx%s operator to %s", h.dimension, h.dimension, path)
