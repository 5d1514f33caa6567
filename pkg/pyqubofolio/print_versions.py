"""Version and runtime information for bug reports."""
from __future__ import annotations

import contextlib
import platform
import sys
from importlib.metadata import PackageNotFoundError
from importlib.metadata import version as get_version
from typing import TextIO

__all__ = ["show_versions"]

DEPENDENCIES = (
    "pyqubofolio",
    "cytoolz",
    "joblib",
    "numpy",
    "pandas",
    "scipy",
    "tomli",
    "typer",
    "ujson",
)
TEST_DEPENDENCIES = ("hypothesis", "pytest")


def blas_info() -> list[tuple[str, str | None]]:
    """Return the BLAS library numpy is linked against, if it can be found."""
    blas = None
    with contextlib.suppress(Exception):
        import numpy as np

        config = np.show_config(mode="dicts")
        blas = config["Build Dependencies"]["blas"]["name"]
    return [("blas", blas)]


def runtime_info() -> list[tuple[str, str | int | None]]:
    """Interpreter, platform and the worker count seen by ``n_jobs=-1``."""
    workers = None
    with contextlib.suppress(Exception):
        import joblib

        workers = joblib.cpu_count()
    return [
        ("python", sys.version.split()[0]),
        ("implementation", platform.python_implementation()),
        ("OS", f"{platform.system()} {platform.release()}"),
        ("machine", platform.machine()),
        ("workers", workers),
    ]


def _version(name: str) -> str:
    try:
        return get_version(name)
    except PackageNotFoundError:
        return "N/A"


def show_versions(file: TextIO = sys.stdout) -> None:
    """Print the runtime and the versions of the dependencies.

    Parameters
    ----------
    file : file-like, optional
        print to the given file-like object. Defaults to sys.stdout.
    """
    names = DEPENDENCIES + TEST_DEPENDENCIES
    pad = len(max(names, key=len)) + 1

    print("\nSYS INFO", file=file)
    print("--------", file=file)
    for k, stat in [*runtime_info(), *blas_info()]:
        print(f"{k}: {stat}", file=file)

    header = f"\n{'PACKAGE':<{pad}}  VERSION"
    print(header, file=file)
    print("-" * len(header), file=file)
    for name in names:
        print(f"{name:<{pad}}  {_version(name)}", file=file)
    print("-" * len(header), file=file)
