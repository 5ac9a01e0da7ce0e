"""
Filesystem helpers.
"""

from pathlib import Path
from typing import Union


def project_root() -> Path:
    """
    Return the root directory of the project.
    """
    return Path(__file__).parent.parent


def output_path(*parts: Union[str, Path], create: bool = True) -> Path:
    """
    Return a path under ``tests/output`` of the project, creating its parent
    directory unless ``create`` is False.
    """
    path = project_root().joinpath("tests", "output", *parts)
    if create:
        path.parent.mkdir(parents=True, exist_ok=True)
    return path
