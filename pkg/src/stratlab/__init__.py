"""stratlab: repeated Bayesian-game laboratory.

Computes optimistic Stackelberg benchmarks for bimatrix games, simulates
algorithm-vs-algorithm repeated play under noisy pre-play signals, and audits
algorithm pairs for approximate pure Nash equilibrium of the induced
meta-game.
"""

__version__ = "0.1.0"
