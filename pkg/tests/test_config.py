import pytest

from entropy_lens.config import (
    ExperimentConfig, TrainConfig, config_echo, load_config, parse_float_list, with_train,
)
from entropy_lens.exceptions import ConfigError
from entropy_lens.presets import DATASET_PRESETS


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()
        assert config.tau == 0.7
        assert config.epsilon == 0.5
        assert config.regularizer_kind == 'entropy'
        assert config.hidden == (10,)

    @pytest.mark.parametrize('changes', [
        {'tau': 0.0}, {'lambda_': -1.0}, {'learning_rate': 0.0}, {'max_epochs': -1}, {'epsilon': 1.0},
        {'regularizer_kind': 'l2'}, {'task_loss': 'hinge'}, {'hidden': ()}, {'hidden': (4, 0)},
        {'val_fraction': 1.0}, {'weight_decay': -0.1},
    ])
    def test_rejects_invalid_values(self, changes):
        with pytest.raises(ConfigError):
            TrainConfig(**changes)

    def test_hidden_becomes_tuple(self):
        assert TrainConfig(hidden=[20, 10]).hidden == (20, 10)


class TestExperimentConfig:
    def test_needs_two_folds(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(folds=1)

    def test_timings_off_by_default(self):
        assert not ExperimentConfig().record_timings

    def test_seed_comes_from_training(self):
        assert ExperimentConfig(train=TrainConfig(seed=9)).seed == 9

    def test_with_train(self):
        config = with_train(ExperimentConfig(), lambda_=1e-3, tau=2.0)
        assert (config.train.lambda_, config.train.tau) == (1e-3, 2.0)


class TestLoadConfig:
    def test_defaults_without_sources(self):
        assert load_config() == ExperimentConfig()

    def test_preset(self):
        config = load_config(preset='toy')
        assert config.dataset.source == 'toy'
        assert config.train.max_epochs == 18000
        assert config.train.hidden == (20, 10)
        assert not config.train.early_stopping
        assert config.preset == 'toy'

    def test_every_preset_builds(self):
        for name in DATASET_PRESETS:
            if DATASET_PRESETS[name]['dataset']['source'] != 'csv':
                load_config(preset=name)

    def test_precedence(self, tmp_path):
        path = tmp_path / 'run.toml'
        path.write_text("[train]\nlambda = 0.01\ntau = 2.0\n\n[dataset]\nfolds = 3\n", encoding='utf-8')
        config = load_config(str(path), preset='toy', overrides={'train.tau': 4.0})
        assert config.train.lambda_ == 0.01
        assert config.train.tau == 4.0
        assert config.folds == 3
        assert config.train.max_epochs == 18000

    def test_output_section(self, tmp_path):
        path = tmp_path / 'run.toml'
        path.write_text("[output]\ndirectory = 'out'\nrecord_timings = true\n\n"
                        "[extract]\nstyle = 'unicode'\n", encoding='utf-8')
        config = load_config(str(path))
        assert config.output_dir == 'out'
        assert config.record_timings
        assert config.style == 'unicode'

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match='config not found'):
            load_config(str(tmp_path / 'absent.toml'))

    @pytest.mark.parametrize('text', ["[model]\nx = 1\n", "[train]\nlearning = 0.1\n", "[train\n"])
    def test_rejects_bad_documents(self, tmp_path, text):
        path = tmp_path / 'bad.toml'
        path.write_text(text, encoding='utf-8')
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_unknown_preset(self):
        with pytest.raises(ConfigError, match='unknown preset'):
            load_config(preset='imagenet')

    def test_invalid_value_type(self):
        with pytest.raises(ConfigError):
            load_config(overrides={'train.tau': -2.0})


class TestConfigEcho:
    def test_layout(self):
        echo = config_echo(load_config(preset='toy'))
        assert set(echo) == {'preset', 'dataset', 'train', 'extract', 'output'}
        assert echo['train']['lambda'] == 1e-4
        assert 'lambda_' not in echo['train']
        assert echo['train']['hidden'] == [20, 10]
        assert echo['dataset']['folds'] == 5


class TestParseFloatList:
    def test_order_and_duplicates(self):
        assert parse_float_list('1e-3, 1e-4,1e-3') == [1e-3, 1e-4]

    @pytest.mark.parametrize('raw', ['', 'a,1', ' , '])
    def test_errors(self, raw):
        with pytest.raises(ConfigError):
            parse_float_list(raw)
