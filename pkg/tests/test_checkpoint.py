import numpy as np
import pytest

from wiplab import CheckpointError, Config, Ensemble, load_checkpoint, save_checkpoint
from wiplab.checkpoint import MAGIC, checkpoint_size
from wiplab.lqr import LqrGains


def _trained_ensemble(m=2, seed=0):
    rng = np.random.default_rng(seed)
    ens = Ensemble.create(m, obs_dim=15, buffer_capacity=1000, rng=rng,
                          hidden=(8, 8))
    # dirty the parameters and optimizer state so round-trips are non-trivial
    from wiplab.sac import Transition
    for i in range(80):
        ens.buffer.push(Transition(rng.normal(size=15), float(np.tanh(rng.normal())),
                                   1.0, rng.normal(size=15), False))
    for member in ens.members:
        member.update(ens.buffer, 3, rng)
    return ens


class TestRoundTrip:
    def test_byte_exact(self, tmp_path):
        ens = _trained_ensemble()
        gains = LqrGains()
        cfg = Config()
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        save_checkpoint(p1, ens, gains, cfg.config_hash())
        loaded, g2, h2 = load_checkpoint(p1, cfg.sac_kwargs(), 1000)
        save_checkpoint(p2, loaded, g2, h2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_survive(self, tmp_path):
        ens = _trained_ensemble()
        path = tmp_path / "c.bin"
        save_checkpoint(path, ens, LqrGains(), Config().config_hash())
        loaded, gains, config_hash = load_checkpoint(path, Config().sac_kwargs(), 1000)
        assert config_hash == Config().config_hash()
        assert gains.K.tolist() == [-100.0, -315.0, -40.0, -40.0]
        assert gains.action_var == 0.4
        assert len(loaded.members) == len(ens.members)
        for a, b in zip(ens.members, loaded.members):
            for pa, pb in zip(a.actor.params(), b.actor.params()):
                assert np.array_equal(pa, pb)
            for pa, pb in zip(a.q2_target.params(), b.q2_target.params()):
                assert np.array_equal(pa, pb)
            assert a.log_alpha == b.log_alpha
            assert a.opt_actor.t == b.opt_actor.t
            for ma, mb in zip(a.opt_actor.m, b.opt_actor.m):
                assert np.array_equal(ma, mb)

    def test_loaded_agent_still_trains(self, tmp_path):
        ens = _trained_ensemble()
        path = tmp_path / "d.bin"
        save_checkpoint(path, ens, LqrGains(), Config().config_hash())
        loaded, _, _ = load_checkpoint(path, {"hidden": (8, 8)}, 1000)
        rng = np.random.default_rng(1)
        from wiplab.sac import Transition
        for _ in range(80):
            loaded.buffer.push(Transition(rng.normal(size=15), 0.1, 1.0,
                                          rng.normal(size=15), False))
        out = loaded.members[0].update(loaded.buffer, 2, rng)
        assert out["status"] == "ok"


class TestIntegrity:
    def test_every_corrupted_byte_detected_or_rejected(self, tmp_path):
        ens = _trained_ensemble(m=1)
        path = tmp_path / "e.bin"
        save_checkpoint(path, ens, LqrGains(), Config().config_hash())
        blob = bytearray(path.read_bytes())
        rng = np.random.default_rng(2)
        for _ in range(20):
            i = int(rng.integers(0, len(blob)))
            orig = blob[i]
            blob[i] ^= 0xFF
            (tmp_path / "f.bin").write_bytes(bytes(blob))
            with pytest.raises(CheckpointError):
                load_checkpoint(tmp_path / "f.bin", {"hidden": (8, 8)}, 1000)
            blob[i] = orig

    def test_truncation_detected(self, tmp_path):
        ens = _trained_ensemble(m=1)
        path = tmp_path / "g.bin"
        save_checkpoint(path, ens, LqrGains(), Config().config_hash())
        blob = path.read_bytes()
        for cut in (4, len(blob) // 2, len(blob) - 1):
            (tmp_path / "h.bin").write_bytes(blob[:cut])
            with pytest.raises(CheckpointError):
                load_checkpoint(tmp_path / "h.bin", {"hidden": (8, 8)}, 1000)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "i.bin"
        p.write_bytes(b"NOPE" + b"\x00" * 100)
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(p)

    def test_magic_constant(self):
        assert MAGIC == b"HLMC"


class TestSize:
    def test_closed_form_matches_default_shape(self, tmp_path):
        rng = np.random.default_rng(3)
        ens = Ensemble.create(10, obs_dim=15, buffer_capacity=100, rng=rng)
        path = tmp_path / "j.bin"
        save_checkpoint(path, ens, LqrGains(), Config().config_hash())
        actor = (15, 64, 64, 2)
        critic = (16, 64, 64, 1)
        expect = checkpoint_size([actor, critic, critic, critic, critic], 10)
        assert path.stat().st_size == expect
