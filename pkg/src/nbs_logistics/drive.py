"""Run output directories and file writes."""

import contextlib
import os
from typing import Any, Callable, Optional

from absl import flags

from nbs_logistics import logger


def initialize_output_dir(directory_path: str, flag_values: flags.FlagValues):
    """Initializes the output directory.

    * Creates the specified directory if it does not exist.
    * Saves the flags in the directory.

    Raises:
        OSError: the directory cannot be created or written to.
    """
    if not directory_exists(directory_path):
        mkdir(directory_path)
        logger.log(f'Created new directory: {directory_path}')

    # Save flags.
    write_file(os.path.join(directory_path, 'flags.txt'), 'wt',
               lambda file: file.write(flag_values.flags_into_string()))


@contextlib.contextmanager
def open_file(filepath: str,
              mode: str = 'rt',
              encoding: Optional[str] = 'utf-8'):
    """Opens a file."""
    if 'b' in mode:
        encoding = None
    with open(filepath, mode, encoding=encoding) as file:
        yield file


def directory_exists(directory_path: str) -> bool:
    """Checks if a directory exists."""
    return os.path.isdir(directory_path)


def mkdir(directory_path: str):
    """Creates a directory and any missing parents."""
    if directory_exists(directory_path):
        return
    os.makedirs(directory_path)


def write_file(filepath: str, mode: str, write_fn: Callable[[Any], Any]):
    """Writes a file through `write_fn`, creating the parent directory.

    `filepath` is replaced only once `write_fn` returns.
    """
    head = os.path.dirname(filepath)
    if head:
        mkdir(head)
    encoding = None if 'b' in mode else 'utf-8'
    newline = None if 'b' in mode else ''
    partial = f'{filepath}.partial'
    try:
        with open(partial, mode, encoding=encoding, newline=newline) as file:
            write_fn(file)
        os.replace(partial, filepath)
    finally:
        if os.path.exists(partial):
            os.remove(partial)
    logger.log(f'Wrote {filepath}')
