import numpy as np
import pytest

from cogspeech.featureset import (AUDIO_DEPENDENT_LEXSYN, Dataset,
                                  FeatureDescriptor, FeatureRegistry,
                                  RegistryMismatchError, assemble_dataset,
                                  build_registry, extract_all, impute,
                                  read_matrix, registry_from_parts,
                                  write_matrix)

from oracles import median_impute_oracle


class TestRegistry:
    def test_exactly_509_features_with_group_counts(self, registry):
        assert len(registry.names) == 509
        groups = [d.group for d in registry.descriptors]
        assert groups.count("lexicosyntactic") == 297
        assert groups.count("acoustic") == 187
        assert groups.count("semantic") == 25

    def test_names_unique(self, registry):
        assert len(set(registry.names)) == 509

    def test_bad_registry_rejected(self, registry):
        descs = registry.descriptors[:508]
        with pytest.raises(ValueError):
            FeatureRegistry(descs)
        swapped = list(registry.descriptors)
        swapped[0] = FeatureDescriptor(swapped[1].name, swapped[0].group,
                                       swapped[0].module)
        with pytest.raises(ValueError):
            FeatureRegistry(swapped)

    def test_hash_stability_and_sensitivity(self, resources, registry):
        again = build_registry(resources)
        assert again.hash() == registry.hash()
        other = registry_from_parts(resources.registry,
                                    ["a", "b", "c", "d", "e"])
        assert other.hash() != registry.hash()


class TestExtractAll:
    def test_full_fixture_corpus_zero_masked(self, corpus_vectors):
        assert len(corpus_vectors) == 12
        for vec in corpus_vectors:
            assert vec.n_masked == 0, (vec.transcript_id,
                                       vec.provenance)

    def test_no_audio_masks_acoustic_group_plus_rates(self, corpus_items,
                                                      resources, registry):
        item = corpus_items[0]
        vec = extract_all(item.transcript, item.trees, None, resources, registry)
        masked = {registry.names[i] for i in np.flatnonzero(vec.mask)}
        acoustic = {d.name for d in registry.descriptors if d.group == "acoustic"}
        assert masked == acoustic | set(AUDIO_DEPENDENT_LEXSYN)
        assert vec.n_masked == 187 + 2
        assert "no_audio" in vec.provenance["masked_inputs"]

    def test_no_trees_masks_syntax_and_pos_dependent(self, corpus_items,
                                                     resources, registry):
        item = corpus_items[0]
        vec = extract_all(item.transcript, None, item.audio, resources, registry)
        masked = {registry.names[i] for i in np.flatnonzero(vec.mask)}
        assert "comp_mean_len_sentence" in masked
        assert "pos_NN" in masked
        assert "norm_imageability_all" in masked
        assert "ratio_nouns_to_verbs" in masked
        assert "rich_ttr" not in masked
        assert "graph_nodes" not in masked

    def test_empty_participant_speech_masks_text_features(self, resources,
                                                          registry):
        from cogspeech.chat_ingest import parse_chat
        transcript = parse_chat("*INV:\tall investigator here .\n", "empty")
        vec = extract_all(transcript, None, None, resources, registry)
        group = registry.group_of()
        for i in np.flatnonzero(~vec.mask):
            name = registry.names[i]
            # the only unmasked features may be degenerate graph counts
            assert name.startswith("graph_") or group[name] == "semantic"

    def test_determinism(self, corpus_items, resources, registry):
        item = corpus_items[3]
        a = extract_all(item.transcript, item.trees, item.audio, resources,
                        registry)
        b = extract_all(item.transcript, item.trees, item.audio, resources,
                        registry)
        assert np.array_equal(a.values, b.values, equal_nan=True)


class TestImpute:
    def test_simple_median(self):
        X = np.array([[1.0], [np.nan], [3.0]])
        ds = Dataset(ids=["a", "b", "c"], X=X)
        filled, medians = impute(ds)
        assert filled.X[1, 0] == 2.0
        assert medians[0] == 2.0

    def test_all_masked_column_zero_with_warning(self, caplog):
        X = np.array([[np.nan], [np.nan]])
        ds = Dataset(ids=["a", "b"], X=X)
        with caplog.at_level("WARNING"):
            filled, medians = impute(ds)
        assert medians[0] == 0.0
        assert np.all(filled.X == 0.0)
        assert any("all-masked" in rec.message for rec in caplog.records)

    def test_random_pattern_matches_reference(self):
        rng = np.random.default_rng(2)
        X = rng.normal(0, 1, (20, 7))
        X[rng.random((20, 7)) < 0.25] = np.nan
        ds = Dataset(ids=[f"t{i}" for i in range(20)], X=X)
        filled, _ = impute(ds)
        assert np.allclose(filled.X, median_impute_oracle(X), atol=1e-12)


class TestMatrixIO:
    def test_round_trip_lossless(self, corpus_dataset, registry, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix(path, corpus_dataset, registry)
        back = read_matrix(path, registry)
        assert back.ids == corpus_dataset.ids
        assert np.allclose(np.nan_to_num(back.X),
                           np.nan_to_num(corpus_dataset.X), atol=1e-12)
        assert np.array_equal(back.labels, corpus_dataset.labels)
        nan_mask = np.isnan(corpus_dataset.mmse)
        assert np.array_equal(np.isnan(back.mmse), nan_mask)
        assert np.allclose(back.mmse[~nan_mask],
                           corpus_dataset.mmse[~nan_mask], atol=1e-12)

    def test_large_synthetic_matrix_round_trip(self, registry, tmp_path):
        rng = np.random.default_rng(3)
        X = rng.normal(0, 1, (156, 509)) * 10.0 ** rng.integers(-6, 6, 509)
        X[rng.random((156, 509)) < 0.02] = np.nan
        ds = Dataset(ids=[f"s{i:03d}" for i in range(156)], X=X,
                     labels=rng.integers(0, 2, 156))
        path = tmp_path / "big.csv"
        write_matrix(path, ds, registry)
        back = read_matrix(path, registry)
        both = ~np.isnan(X)
        assert np.array_equal(np.isnan(back.X), np.isnan(X))
        assert np.max(np.abs(back.X[both] - X[both])) == 0.0

    def test_registry_hash_mismatch_rejected(self, corpus_dataset, registry,
                                             resources, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix(path, corpus_dataset, registry)
        other = registry_from_parts(resources.registry, ["x1", "x2", "x3",
                                                         "x4", "x5"])
        with pytest.raises(RegistryMismatchError):
            read_matrix(path, other)

    def test_column_tampering_rejected(self, corpus_dataset, registry, tmp_path):
        path = tmp_path / "m.csv"
        write_matrix(path, corpus_dataset, registry)
        lines = path.read_text().splitlines()
        lines[1] = lines[1].replace("rich_ttr", "rich_tampered")
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(RegistryMismatchError):
            read_matrix(path, registry)


class TestDataset:
    def test_label_validation(self):
        with pytest.raises(ValueError):
            Dataset(ids=["a"], X=np.zeros((1, 509)), labels=np.array([2]))

    def test_assemble_alignment(self, corpus_vectors, corpus_items):
        labels = {it.transcript.id: it.transcript.label for it in corpus_items}
        ds = assemble_dataset(corpus_vectors, labels=labels)
        assert ds.X.shape == (12, 509)
        assert ds.labels.sum() == 6           # balanced fixture corpus
