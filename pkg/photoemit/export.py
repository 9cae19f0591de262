"""CSV and manifest output."""

from csv import writer
from json import dump
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from photoemit.common import LOGGER
from photoemit.types import RunManifest


__all__ = ["format_value", "write_csv", "write_manifest"]


def format_value(value) -> str:
    """Format a cell with 17 significant digits."""

    if isinstance(value, str):
        return value

    if isinstance(value, (bool, np.bool_)):
        return str(int(value))

    if isinstance(value, (int, np.integer)):
        return str(int(value))

    return "%.17g" % float(value)


def write_csv(path: Path, header: Sequence[str],
              rows: Iterable[Sequence]) -> Path:
    """Write a CSV file with a header row and LF line endings."""

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0

    with path.open("w", encoding="utf-8", newline="") as file:
        csv = writer(file, lineterminator="\n")
        csv.writerow(header)

        for row in rows:
            csv.writerow([format_value(value) for value in row])
            count += 1

    LOGGER.info("Wrote %i rows to %s.", count, path)
    return path


def write_manifest(directory: Path, manifest: RunManifest) -> Path:
    """Write manifest.json into the output directory."""

    path = Path(directory) / "manifest.json"
    path.parent.mkdir(parents=True, exist_ok=True)

    with path.open("w", encoding="utf-8") as file:
        dump(manifest.to_json(), file, indent=2, sort_keys=True)
        file.write("\n")

    LOGGER.debug("Wrote manifest to %s.", path)
    return path
