"""
KernelTestLab - CSV Ingestion
Loads numeric samples from headered CSV files with pandas
"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.kernels.kernel_core import SampleMatrix
from src.utils.errors import DataParseError, InvalidInputError

PathLike = Union[str, Path]


def _first_offender(mask: pd.DataFrame) -> Tuple[int, str]:
    """Row (1-based, header excluded) and column of the first True cell."""
    rows, cols = np.nonzero(mask.to_numpy())
    order = np.lexsort((cols, rows))[0]
    return int(rows[order]) + 1, str(mask.columns[cols[order]])


def load_csv(path: PathLike, columns: Optional[Sequence[str]] = None) -> pd.DataFrame:
    """
    Read a headered CSV and validate that the selected columns are numeric

    Args:
        path: CSV file
        columns: Columns to keep (default: all)

    Returns:
        DataFrame of float columns

    Raises:
        DataParseError: malformed file or non-numeric cell (with row and column)
        InvalidInputError: empty cells
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise InvalidInputError(f"file not found: {path}") from exc
    except pd.errors.EmptyDataError as exc:
        raise DataParseError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise DataParseError(f"{path}: {exc}") from exc

    if columns is not None:
        missing = [c for c in columns if c not in frame.columns]
        if missing:
            raise DataParseError(f"{path}: missing column(s) {missing}", column=missing[0])
        frame = frame[list(columns)]

    if frame.shape[1] == 0:
        raise DataParseError(f"{path}: no columns")

    missing_cells = frame.isna()
    if missing_cells.to_numpy().any():
        row, column = _first_offender(missing_cells)
        raise InvalidInputError(f"{path}: empty or NaN cell at row {row}, column '{column}'")

    numeric = frame.apply(pd.to_numeric, errors='coerce')
    bad = numeric.isna()
    if bad.to_numpy().any():
        row, column = _first_offender(bad)
        raise DataParseError(f"{path}: non-numeric value '{frame.iloc[row - 1][column]}'", row=row, column=column)

    if not np.all(np.isfinite(numeric.to_numpy(dtype=float))):
        row, column = _first_offender(~np.isfinite(numeric))
        raise InvalidInputError(f"{path}: non-finite value at row {row}, column '{column}'")

    logger.debug(f"Loaded {path.name}: {numeric.shape[0]} rows x {numeric.shape[1]} columns")
    return numeric.astype(float)


def load_sample(path: PathLike, columns: Optional[Sequence[str]] = None) -> SampleMatrix:
    """CSV rows as a SampleMatrix."""
    return SampleMatrix(load_csv(path, columns).to_numpy())


def split_groups(path: PathLike, group_column: str) -> Tuple[SampleMatrix, SampleMatrix, List[str]]:
    """
    Split one CSV into two samples by a label column

    The first label in file order becomes X, the other Y.

    Returns:
        (X, Y, [label_x, label_y])
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except pd.errors.ParserError as exc:
        raise DataParseError(f"{path}: {exc}") from exc
    if group_column not in frame.columns:
        raise DataParseError(f"{path}: group column not found", column=group_column)

    labels = list(pd.unique(frame[group_column].astype(str)))
    if len(labels) != 2:
        raise InvalidInputError(f"{path}: group column '{group_column}' must have exactly 2 labels, got {labels}")

    value_columns = [c for c in frame.columns if c != group_column]
    values = load_csv(path, value_columns)
    groups = frame[group_column].astype(str)
    X = SampleMatrix(values[groups == labels[0]].to_numpy())
    Y = SampleMatrix(values[groups == labels[1]].to_numpy())
    return X, Y, labels
