"""Data-driven constitutive modeling with architecture search and cell-state explanation.

The package covers the full pipeline:

* :mod:`mechxai.constitutive`: reference material models and history variables,
* :mod:`mechxai.loadgen`: randomized loading sequences and dataset assembly,
* :mod:`mechxai.tensornet`: a small numpy network engine with BPTT and Adam,
* :mod:`mechxai.hypersearch`: Hyperband search with successive halving,
* :mod:`mechxai.xai`: PCA of recurrent cell states against history variables,
* :mod:`mechxai.cli`: the ``mechxai`` command-line pipeline.
"""

__version__ = "0.1.0"

from . import constitutive, errors, loadgen, tensornet  # noqa: E402
from . import hypersearch, xai  # noqa: E402
from . import cli  # noqa: E402

__all__ = ["constitutive", "errors", "loadgen", "tensornet", "hypersearch", "xai",
           "cli", "__version__"]
