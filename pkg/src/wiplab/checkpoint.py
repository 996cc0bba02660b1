"""Versioned binary checkpoints for the policy ensemble.

Layout, all little-endian:

    magic       4s      b"HLMC"
    version     u32     currently 1
    confhash    32s     sha256 of the resolved config text
    gains       4*f64   feedback gain vector
    action_var  f64
    members     u32
    per member:
        5 networks (actor, q1, q2, q1_target, q2_target):
            n_dims u32, dims u32*n_dims,
            per layer: W row-major f64, then b f64
        log_alpha f64
        3 optimizers (actor, q1, q2): t u64, then m and v arrays in
            (W0, b0, W1, b1, ...) order
        alpha optimizer: t u64, m f64, v f64
    crc32       u32     over every preceding byte

Round-trips are byte-exact; a single flipped payload byte fails the
trailing checksum rather than producing a silently corrupt ensemble.
"""

import struct
import zlib

import numpy as np

from .errors import CheckpointError
from .fusion import Ensemble
from .lqr import LqrGains
from .nets import AdamState, Mlp
from .sac import ReplayBuffer, SacAgent

__all__ = ["save_checkpoint", "load_checkpoint", "checkpoint_size", "MAGIC", "VERSION"]

MAGIC = b"HLMC"
VERSION = 1


def _net_bytes(out: bytearray, net: Mlp) -> None:
    dims = net.layer_dims
    out += struct.pack("<I", len(dims))
    out += struct.pack(f"<{len(dims)}I", *dims)
    for w, b in zip(net.weights, net.biases):
        out += np.ascontiguousarray(w, dtype="<f8").tobytes()
        out += np.ascontiguousarray(b, dtype="<f8").tobytes()


def _opt_bytes(out: bytearray, opt: AdamState) -> None:
    out += struct.pack("<Q", opt.t)
    for m in opt.m:
        out += np.ascontiguousarray(m, dtype="<f8").tobytes()
    for v in opt.v:
        out += np.ascontiguousarray(v, dtype="<f8").tobytes()


def save_checkpoint(path, ensemble: Ensemble, gains: LqrGains, config_hash: str) -> None:
    """Serialize the ensemble with gains and the config hash, CRC-tailed."""
    out = bytearray()
    out += MAGIC
    out += struct.pack("<I", VERSION)
    digest = bytes.fromhex(config_hash) if config_hash else b"\x00" * 32
    if len(digest) != 32:
        raise CheckpointError("config hash must be 32 bytes of hex")
    out += digest
    out += struct.pack("<4d", *gains.K)
    out += struct.pack("<d", gains.action_var)
    out += struct.pack("<I", len(ensemble.members))
    for agent in ensemble.members:
        for net in (agent.actor, agent.q1, agent.q2, agent.q1_target, agent.q2_target):
            _net_bytes(out, net)
        out += struct.pack("<d", float(agent.log_alpha))
        for opt in (agent.opt_actor, agent.opt_q1, agent.opt_q2):
            _opt_bytes(out, opt)
        out += struct.pack("<Q", agent.opt_alpha.t)
        out += struct.pack("<d", float(agent.opt_alpha.m[0]))
        out += struct.pack("<d", float(agent.opt_alpha.v[0]))
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    with open(path, "wb") as fh:
        fh.write(bytes(out))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, fmt: str):
        size = struct.calcsize(fmt)
        if self.pos + size > len(self.data):
            raise CheckpointError("checkpoint truncated")
        vals = struct.unpack_from(fmt, self.data, self.pos)
        self.pos += size
        return vals

    def array(self, shape) -> np.ndarray:
        count = int(np.prod(shape))
        size = 8 * count
        if self.pos + size > len(self.data):
            raise CheckpointError("checkpoint truncated")
        arr = np.frombuffer(self.data, dtype="<f8", count=count, offset=self.pos)
        self.pos += size
        return arr.reshape(shape).astype(float)


def _read_net(r: _Reader) -> Mlp:
    (n_dims,) = r.take("<I")
    if not 2 <= n_dims <= 64:
        raise CheckpointError(f"implausible layer count {n_dims}")
    dims = r.take(f"<{n_dims}I")
    net = Mlp(dims)
    for i in range(len(dims) - 1):
        net.weights[i] = r.array((dims[i], dims[i + 1]))
        net.biases[i] = r.array((dims[i + 1],))
    return net


def _read_opt(r: _Reader, params) -> AdamState:
    opt = AdamState(params)
    (opt.t,) = r.take("<Q")
    opt.m = [r.array(p.shape) for p in params]
    opt.v = [r.array(p.shape) for p in params]
    return opt


def load_checkpoint(path, sac_kwargs: dict | None = None,
                    buffer_capacity: int = 1_000_000):
    """Load (Ensemble, LqrGains, config_hash_hex) from a checkpoint file.

    Agent hyperparameters (discount, polyak, learning rate, ...) are not
    serialized; pass the ones from the config the checkpoint was trained
    with as ``sac_kwargs``.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 8:
        raise CheckpointError("checkpoint truncated")
    if data[:4] != MAGIC:
        raise CheckpointError(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    payload, tail = data[:-4], data[-4:]
    (crc_stored,) = struct.unpack("<I", tail)
    if zlib.crc32(payload) != crc_stored:
        raise CheckpointError("checksum mismatch: checkpoint is corrupt")

    r = _Reader(payload)
    r.pos = 4
    (version,) = r.take("<I")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    config_hash = payload[r.pos:r.pos + 32].hex()
    r.pos += 32
    k = np.array(r.take("<4d"))
    (action_var,) = r.take("<d")
    gains = LqrGains(K=k, action_var=action_var)
    (n_members,) = r.take("<I")
    if not 1 <= n_members <= 4096:
        raise CheckpointError(f"implausible member count {n_members}")

    kwargs = dict(sac_kwargs or {})
    members = []
    obs_dim = None
    for _ in range(n_members):
        actor = _read_net(r)
        q1 = _read_net(r)
        q2 = _read_net(r)
        q1_t = _read_net(r)
        q2_t = _read_net(r)
        obs_dim = actor.layer_dims[0]
        hidden = actor.layer_dims[1:-1]
        agent = SacAgent(obs_dim=obs_dim, **{**kwargs, "hidden": hidden})
        agent.actor, agent.q1, agent.q2 = actor, q1, q2
        agent.q1_target, agent.q2_target = q1_t, q2_t
        (log_alpha,) = r.take("<d")
        agent.log_alpha = np.array(log_alpha)
        agent.opt_actor = _read_opt(r, actor.params())
        agent.opt_q1 = _read_opt(r, q1.params())
        agent.opt_q2 = _read_opt(r, q2.params())
        agent.opt_alpha = AdamState([agent.log_alpha], agent.lr)
        (agent.opt_alpha.t,) = r.take("<Q")
        agent.opt_alpha.m = [np.array(r.take("<d")[0])]
        agent.opt_alpha.v = [np.array(r.take("<d")[0])]
        members.append(agent)
    if r.pos != len(payload):
        raise CheckpointError(f"{len(payload) - r.pos} unread bytes after members")

    ensemble = Ensemble(members, ReplayBuffer(obs_dim, buffer_capacity))
    return ensemble, gains, config_hash


def checkpoint_size(layer_dims_per_net, n_members: int) -> int:
    """Closed-form byte count of a checkpoint with the given net shapes.

    ``layer_dims_per_net`` lists the five dim tuples (actor, q1, q2, and
    the two targets share q1/q2 shapes are included explicitly).
    """
    total = 4 + 4 + 32 + 4 * 8 + 8 + 4  # header through member count
    per_member = 0
    for dims in layer_dims_per_net:
        per_member += 4 + 4 * len(dims)
        n_params = sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))
        per_member += 8 * n_params
    # optimizers: actor, q1, q2 carry t + m + v over their net's params
    for dims in layer_dims_per_net[:3]:
        n_params = sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))
        per_member += 8 + 16 * n_params
    per_member += 8  # log_alpha
    per_member += 8 + 16  # alpha optimizer
    total += n_members * per_member
    total += 4  # crc
    return total
