import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from georeason import default_corpus_path, default_library_path  # noqa: E402
from georeason.dataset import build_experience, load_corpus, split  # noqa: E402
from georeason.deduction import Environment  # noqa: E402
from georeason.lang import parse_cdl, parse_gdl  # noqa: E402
from georeason.policy import Featurizer, PolicyModel, TrainConfig, train_supervised  # noqa: E402


@pytest.fixture(scope="session")
def library():
    return parse_gdl(default_library_path().read_text())


@pytest.fixture(scope="session")
def env(library):
    return Environment(library)


@pytest.fixture(scope="session")
def corpus(library, env):
    return load_corpus(default_corpus_path(), library, env)


@pytest.fixture(scope="session")
def records_by_id(corpus):
    return {r.id: r for r in corpus}


@pytest.fixture(scope="session")
def featurizer(env):
    return Featurizer(env)


@pytest.fixture(scope="session")
def corpus_split(corpus):
    return split(corpus, (0.7, 0.15, 0.15), seed=0)


@pytest.fixture(scope="session")
def sl_model(env, featurizer, corpus_split):
    pool = build_experience(corpus_split.train, env, featurizer)
    base = PolicyModel.zeros(featurizer.dim, [str(a) for a in env.actions])
    model, _ = train_supervised(base, pool, TrainConfig())
    return model


@pytest.fixture
def cdl(library):
    def make(source: str):
        return parse_cdl(source, library)
    return make
