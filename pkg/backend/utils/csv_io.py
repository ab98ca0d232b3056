"""
Deterministic CSV emission and trace ingestion.

Output files are plain CSV preceded by ``#`` comment lines. Numbers carry
12 significant digits, '.' as decimal separator and '\\n' line endings, so
identical inputs give byte-identical files.
"""

import logging
import sys
from pathlib import Path
from typing import Iterable, Optional, TextIO, Union

import numpy as np
import pandas as pd

from core.errors import BadTrace, IoError
from core.fit import Trace

from .units import hz_to_angular

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
TRACE_DETUNING_COLUMN = "delta_p_over_2pi_hz"

Destination = Union[str, Path, TextIO]


def format_value(value) -> str:
    """Format a scalar the way table cells are formatted."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return FLOAT_FORMAT % value
    return str(value)


def comment_lines(lines: Iterable[str]) -> str:
    return "".join(f"# {line}\n" if line else "#\n" for line in lines)


def render_table(frame: pd.DataFrame, header: Iterable[str] = (), footer: Iterable[str] = ()) -> str:
    """Render comment header, CSV body and comment footer as one string."""
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n", na_rep="nan")
    return comment_lines(header) + body + comment_lines(footer)


def write_text(text: str, destination: Optional[Destination]) -> None:
    """
    Write ``text`` to a path, an open stream, or stdout when None.

    Raises:
        IoError: If the file cannot be written
    """
    if destination is None:
        destination = sys.stdout
    if hasattr(destination, "write"):
        destination.write(text)
        return
    path = Path(destination)
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc
    logger.info("Wrote %s", path)


def write_table(
    frame: pd.DataFrame,
    destination: Optional[Destination],
    header: Iterable[str] = (),
    footer: Iterable[str] = (),
) -> None:
    write_text(render_table(frame, header, footer), destination)


def read_trace_csv(source: Union[str, Path, TextIO]) -> Trace:
    """
    Read a transmission trace written by the spectrum command (or by hand).

    Required column: ``delta_p_over_2pi_hz``. Samples come from ``re_t`` and
    ``im_t`` when present, else from ``abs_t`` or ``T`` (magnitude only).
    An optional ``weight`` column is passed through. Lines starting with
    ``#`` are ignored. When the file holds several spectra (an
    ``omega_c_over_2pi_hz`` column) only the first block is used.

    Raises:
        IoError: If the file cannot be read or lacks the needed columns
        BadTrace: If the samples violate the trace invariants
    """
    try:
        frame = pd.read_csv(source, comment="#")
    except FileNotFoundError as exc:
        raise IoError(f"trace file not found: {source}") from exc
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise IoError(f"cannot read trace {source}: {exc}") from exc

    if TRACE_DETUNING_COLUMN not in frame.columns:
        raise IoError(f"trace needs a {TRACE_DETUNING_COLUMN} column, found {list(frame.columns)}")
    if "omega_c_over_2pi_hz" in frame.columns:
        first = frame["omega_c_over_2pi_hz"].iloc[0]
        frame = frame[frame["omega_c_over_2pi_hz"] == first]
        logger.info("Trace file holds several spectra; using omega_c/2pi = %s Hz", format_value(first))

    try:
        detunings = hz_to_angular(frame[TRACE_DETUNING_COLUMN].to_numpy(dtype=float))
        weights = frame["weight"].to_numpy(dtype=float) if "weight" in frame.columns else None
        if {"re_t", "im_t"} <= set(frame.columns):
            t = frame["re_t"].to_numpy(dtype=float) + 1j * frame["im_t"].to_numpy(dtype=float)
            return Trace(detunings, t, weights)
        if "abs_t" in frame.columns:
            return Trace.from_magnitude(detunings, frame["abs_t"].to_numpy(dtype=float), weights)
        if "T" in frame.columns:
            power = frame["T"].to_numpy(dtype=float)
            return Trace.from_magnitude(detunings, np.sqrt(np.clip(power, 0.0, None)), weights)
    except BadTrace:
        raise
    except ValueError as exc:
        raise IoError(f"trace {source} has non-numeric values: {exc}") from exc
    raise IoError("trace needs re_t and im_t, abs_t, or T columns")
