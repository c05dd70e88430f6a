"""Deductive geometry problem solving as a Markov decision process.

The package is organised bottom-up:

* :mod:`georeason.lang` parses the definition language (predicates,
  attributes, theorems) and the problem declaration language.
* :mod:`georeason.algebra` keeps the exact-rational equation store.
* :mod:`georeason.deduction` is the environment: fact base, premise
  matching, theorem application, proof traces, reward.
* :mod:`georeason.search` holds the forward/backward baseline searchers.
* :mod:`georeason.policy` is the linear-softmax theorem predictor.
* :mod:`georeason.mcts` is the policy-guided tree search and RL loop.
* :mod:`georeason.dataset` loads corpora, splits them and replays
  annotated solutions into an experience pool.
"""

from importlib import resources
from pathlib import Path

__version__ = "0.1.0"


def data_path(*parts: str) -> Path:
    """Location of a bundled data file (theorem library, seed corpus)."""
    return Path(str(resources.files("georeason").joinpath("data", *parts)))


def default_library_path() -> Path:
    return data_path("library.gdl")


def default_corpus_path() -> Path:
    return data_path("corpus")
