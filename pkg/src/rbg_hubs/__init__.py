"""rbg_hubs package (src layout).

Random bipartite geometric graphs of agents and hubs: Poisson sampling,
pair-keyed edge construction, Palm degree estimators, closed-form and
quadrature theory, and finite-size percolation sweeps. Exposes the
experiment orchestrator for library consumers.
"""

__version__ = "0.1.0"

from .orchestration import ExperimentOrchestrator  # noqa: E402,F401

__all__ = ["ExperimentOrchestrator", "__version__"]
