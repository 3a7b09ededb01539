import json

import pytest

from cogspeech.config import (ConfigError, PipelineConfig, RESOURCE_ENV,
                              load_resources)


class TestPipelineConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError) as err:
            PipelineConfig.from_dict({"norms_path": "n.tsv",
                                      "not_a_real_option": 3})
        assert "not_a_real_option" in str(err.value)

    def test_defaults(self):
        cfg = PipelineConfig.from_dict({})
        assert cfg.participant_tier == "PAR"
        assert cfg.mattr_window == 20
        assert cfg.seeds == (0, 1, 2)

    def test_config_file_sets_resource_root(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"norms_path": "norms.tsv"}))
        cfg = PipelineConfig.from_json_file(path)
        assert cfg.resource_root == str(tmp_path)
        assert cfg.resolve("norms.tsv") == tmp_path / "norms.tsv"

    def test_env_var_resource_root_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv(RESOURCE_ENV, str(tmp_path))
        cfg = PipelineConfig.from_dict({"norms_path": "norms.tsv"})
        assert cfg.resolve("norms.tsv") == tmp_path / "norms.tsv"

    def test_absolute_paths_untouched(self, tmp_path):
        cfg = PipelineConfig.from_dict({})
        target = tmp_path / "x.tsv"
        assert cfg.resolve(str(target)) == target


class TestLoadResources:
    def test_missing_norms_is_actionable(self):
        with pytest.raises(ConfigError) as err:
            load_resources(PipelineConfig.from_dict({}))
        assert "norms_path" in str(err.value)

    def test_wrong_embedding_count_rejected(self, tmp_path):
        norms = tmp_path / "norms.tsv"
        norms.write_text("cat\timageability\t5.0\n")
        cfg = PipelineConfig.from_dict({
            "norms_path": str(norms),
            "embeddings": [{"name": "only_one", "dim": 2, "path": "e.txt"}]})
        with pytest.raises(ConfigError) as err:
            load_resources(cfg)
        assert "5 embedding spaces" in str(err.value)

    def test_embedding_dim_mismatch_rejected(self, tmp_path):
        norms = tmp_path / "norms.tsv"
        norms.write_text("cat\timageability\t5.0\n")
        emb = tmp_path / "e.txt"
        emb.write_text("cat 1.0 0.0\n")
        entries = [{"name": f"s{i}", "dim": 3, "path": str(emb)}
                   for i in range(5)]
        cfg = PipelineConfig.from_dict({"norms_path": str(norms),
                                        "embeddings": entries})
        with pytest.raises(ConfigError) as err:
            load_resources(cfg)
        assert "dim" in str(err.value)

    def test_fixture_config_loads(self, corpus_dir):
        cfg = PipelineConfig.from_json_file(corpus_dir / "config.json")
        res = load_resources(cfg)
        assert len(res.spaces) == 5
        assert [s.dim for s in res.spaces] == [50, 100, 200, 300, 300]
        assert res.norms.values
