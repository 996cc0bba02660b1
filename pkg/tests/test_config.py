import pytest

from wiplab import Config, ParameterError


class TestDefaults:
    def test_published_values(self):
        cfg = Config()
        assert (cfg.m0, cfg.mw, cfg.I0, cfg.Iw) == (6.8, 0.4297, 0.16, 0.00278)
        assert (cfg.L, cfg.r) == (0.28, 0.06)
        assert cfg.gains == (-100.0, -315.0, -40.0, -40.0)
        assert cfg.action_var == 0.4
        assert cfg.lr == 1e-3
        assert cfg.gamma == 0.99
        assert cfg.polyak == 0.995
        assert cfg.batch_size == 64
        assert cfg.buffer_capacity == 1_000_000
        assert cfg.members == 10
        assert cfg.steps_per_epoch == 4000
        assert cfg.update_every == 1000
        assert (cfg.reward_k_pos, cfg.reward_k_pitch) == (0.1, 0.1)
        assert (cfg.pos_gate, cfg.pitch_gate) == (1.0, 0.35)

    def test_factories(self):
        cfg = Config()
        assert cfg.plant().m0 == 6.8
        assert cfg.lqr_gains().K.tolist() == [-100.0, -315.0, -40.0, -40.0]
        assert cfg.reward_config().pos_gate == 1.0
        assert cfg.task_profile("task1").kind == "balance"
        assert cfg.task_profile("task2").kind == "quintic_velocity"
        assert cfg.task_profile("task3").kind == "quintic_position"


class TestLoad:
    def test_overlay(self, tmp_path):
        p = tmp_path / "run.ini"
        p.write_text("[plant]\nm0 = 5.5\n\n[train]\nepochs = 3\nseed = 42\n")
        cfg = Config.load(p)
        assert cfg.m0 == 5.5
        assert cfg.epochs == 3
        assert cfg.seed == 42
        assert cfg.mw == 0.4297  # untouched default

    def test_unknown_key_named_in_error(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[plant]\nmass_of_robot = 5\n")
        with pytest.raises(ParameterError, match="plant.mass_of_robot"):
            Config.load(p)

    def test_unknown_section(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[rocket]\nthrust = 5\n")
        with pytest.raises(ParameterError, match="rocket"):
            Config.load(p)

    def test_bad_value_named_in_error(self, tmp_path):
        p = tmp_path / "bad.ini"
        p.write_text("[sac]\ngamma = fast\n")
        with pytest.raises(ParameterError, match="sac.gamma"):
            Config.load(p)

    def test_gain_list_length_checked(self):
        with pytest.raises(ParameterError, match="gains"):
            Config.loads("[lqr]\ngains = -1,-2,-3\n")

    def test_bool_and_list_parsing(self):
        cfg = Config.loads(
            "[task]\nhistory_inputs = false\n\n"
            "[bench]\nbench_seeds = 5,6\nbench_methods = lqr\n")
        assert cfg.history_inputs is False
        assert cfg.bench_seeds == (5, 6)
        assert cfg.bench_methods == ("lqr",)


class TestResolvedText:
    def test_round_trip_stable(self):
        cfg = Config()
        text = cfg.resolved_text()
        again = Config.loads(text)
        assert again.resolved_text() == text
        assert again.config_hash() == cfg.config_hash()

    def test_hash_sensitive_to_values(self):
        a = Config()
        b = Config()
        b.m0 = 7.0
        assert a.config_hash() != b.config_hash()

    def test_every_field_serialized(self):
        text = Config().resolved_text()
        for section in ("[plant]", "[lqr]", "[policy]", "[sac]", "[ensemble]",
                        "[task]", "[train]", "[bench]"):
            assert section in text
        assert "gains = -100.0,-315.0,-40.0,-40.0" in text
