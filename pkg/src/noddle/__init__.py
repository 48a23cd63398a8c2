"""Link prediction from node2vec embeddings and a deep edge classifier."""

import os

# numba otherwise probes TBB first and warns when the installed version is too old
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

from .errors import (ConfigError, ContractError, DataError, NoddleError,  # noqa: E402
                     NumericalError)
from .graph import Graph, load_edge_list  # noqa: E402

__version__ = "0.1.0"

__all__ = ["ConfigError", "ContractError", "DataError", "Graph", "NoddleError", "NumericalError",
           "load_edge_list", "__version__"]
