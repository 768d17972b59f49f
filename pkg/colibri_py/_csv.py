"""The CSV dialect of every table the package writes."""
import io
import os
import csv
from typing import Any
from typing import Union
from typing import Sequence


def write_csv(
    target: Union[str, os.PathLike, io.TextIOBase],
    header: Sequence[str],
    rows: Sequence[Sequence[Any]],
) -> None:
    """
    Write a header and rows with `\\n` line endings.

    Args:
        target: a path or an open text stream
        header: the column names
        rows: the records, one sequence per row

    Returns:
        None

    """
    if isinstance(target, io.TextIOBase):
        writer = csv.writer(target, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
        return
    with open(target, 'w', newline='') as stream:
        write_csv(stream, header, rows)


# explicitly define the outward facing API of this module
__all__ = [write_csv.__name__]
