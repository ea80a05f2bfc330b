"""Python access to the itep core library."""

from ._itep import (
    ItepError,
    Pencil,
    __version__,
    assemble,
    condition1_roots,
    eigenvalues,
    find_roots,
    principal_symbol,
    run_cli,
    torus_embedding_sum,
)

__all__ = [
    "ItepError",
    "Pencil",
    "__version__",
    "assemble",
    "condition1_roots",
    "eigenvalues",
    "find_roots",
    "principal_symbol",
    "run_cli",
    "torus_embedding_sum",
]
