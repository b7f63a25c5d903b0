"""k4flab: simulator and verification harness for the K4-free random greedy process.

The package has three layers:

* graph kernels (`graphcore`) and deterministic randomness (`rng`),
* process simulators (`greedy`, `staged`) and analytic predictions
  (`trajectory`, `survival`, `ramsey`),
* an experiment harness (`harness`) plus a CLI (`cli`) that ties the
  pieces together and writes CSV artifacts.
"""

from .errors import ConfigError, K4LabError, NumericError

__version__ = "0.1.0"

__all__ = ["ConfigError", "K4LabError", "NumericError", "__version__"]
