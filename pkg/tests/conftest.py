from __future__ import annotations

import pytest

from cogspeech.config import PipelineConfig, load_resources
from cogspeech.corpus import load_corpus
from cogspeech.featureset import assemble_dataset, build_registry, extract_all
from cogspeech.fixtures import generate_corpus

FIXTURE_SEED = 7


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    generate_corpus(out, seed=FIXTURE_SEED)
    return out


@pytest.fixture(scope="session")
def resources(corpus_dir):
    cfg = PipelineConfig.from_json_file(corpus_dir / "config.json")
    return load_resources(cfg)


@pytest.fixture(scope="session")
def registry(resources):
    return build_registry(resources)


@pytest.fixture(scope="session")
def corpus_items(corpus_dir):
    return load_corpus(corpus_dir)


@pytest.fixture(scope="session")
def corpus_vectors(corpus_items, resources, registry):
    return [extract_all(item.transcript, item.trees, item.audio, resources,
                        registry)
            for item in corpus_items]


@pytest.fixture(scope="session")
def corpus_dataset(corpus_items, corpus_vectors):
    labels = {it.transcript.id: it.transcript.label for it in corpus_items}
    mmse = {it.transcript.id: it.transcript.mmse for it in corpus_items}
    return assemble_dataset(corpus_vectors, labels=labels, mmse=mmse)
