"""
This module contains the output helpers: CSV files headed by a metadata
block and terminal tables.
"""
from __future__ import annotations
import pathlib
import sys
from typing import Any

import pandas as pd
from tabulate import tabulate

import src

METADATA_PREFIX = "# "


def build_metadata(**fields: Any) -> dict[str, Any]:
    """
    The metadata written above every CSV, with the software version.

    Keyword args:
        Any reproducibility field, e.g. seed, horizon or threshold. None
        values are dropped.

    Returns:
        The metadata in insertion order.
    """
    metadata = {"version": src.__version__}
    metadata.update(
        (key, value) for key, value in fields.items() if value is not None
    )
    return metadata


def write_csv(
    frame: pd.DataFrame,
    path: str | pathlib.Path,
    metadata: dict[str, Any]
) -> pathlib.Path:
    """
    Write a data frame as CSV below a "# key: value" metadata block.

    Args:
        frame: The rows to write
        path: The output path, parent directories are created
        metadata: The metadata fields

    Returns:
        The resolved output path.
    """
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(
        path,
        "w",
        encoding=sys.getdefaultencoding(),
        newline=""
    ) as file:
        for key, value in metadata.items():
            file.write(f"{METADATA_PREFIX}{key}: {value}\n")
        frame.to_csv(file, index=False)
    return path.resolve()


def read_csv(path: str | pathlib.Path) -> tuple[pd.DataFrame, dict[str, str]]:
    """
    Read a CSV written by write_csv.

    Args:
        path: The CSV path

    Returns:
        The rows and the metadata, values kept as strings.
    """
    metadata: dict[str, str] = {}
    with open(
        pathlib.Path(path),
        "r",
        encoding=sys.getdefaultencoding()
    ) as file:
        for line in file:
            if not line.startswith(METADATA_PREFIX):
                break
            key, _, value = line[len(METADATA_PREFIX):].partition(": ")
            metadata[key] = value.rstrip("\n")
    return pd.read_csv(path, comment="#"), metadata


def print_metadata(metadata: dict[str, Any], title: str | None = None) -> None:
    """
    Print metadata fields as a two column table.

    Args:
        metadata: The fields to print
        title: An optional heading
    """
    if title is not None:
        print(title)
    print(tabulate(list(metadata.items()), floatfmt=".4f"), end="\n\n")


def print_table(frame: pd.DataFrame, title: str | None = None) -> None:
    """
    Print a data frame as a table.

    Args:
        frame: The rows to print
        title: An optional heading
    """
    if title is not None:
        print(title)
    print(tabulate(
        list(frame.itertuples(index=False, name=None)),
        headers=list(frame.columns),
        floatfmt=".4f"
    ), end="\n\n")
