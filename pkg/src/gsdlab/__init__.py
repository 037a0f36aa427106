"""gsdlab: how do thermal and ideal quantum annealers sample degenerate
ground-state manifolds of planted Ising spin glasses?

Submodules: topology (graphs), instances (planted generation), enumerator
(bucket elimination), sa (Metropolis annealing), quantum (subspace quantum
ground states), stats (distances, tests, bias), pipeline + cli (orchestration).
"""

__version__ = "0.1.0"
