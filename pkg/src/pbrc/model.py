"""Topology construction and model artifact serialization.

``build_encoder`` assembles one of the three topologies behind a uniform
``encode(frames)`` surface:

* ``esn``  — one unidirectional reservoir, encoded length n_r
* ``brc``  — one bidirectional reservoir, encoded length 2*n_r
* ``pbrc`` — two parallel bidirectional reservoirs, encoded length 4*n_r

A trained model is stored as a single JSON document (format_version 1)
holding the config snapshot, every weight matrix, the normalization stats
and the readout. Floats use the shortest round-tripping decimal form, so
a saved model predicts bit-identically after loading.
"""

import json
from dataclasses import dataclass, replace

import numpy as np

from .bidir import BidirReservoir, bidir_encode, init_bidir
from .dataset import NormStats, resample_frames
from .errors import SchemaError
from .parallel import PbrcEncoder, init_pbrc, pbrc_encode
from .readout import RidgeReadout
from .reservoir import POOLING_POLICIES, ReservoirConfig, ReservoirWeights, esn_encode, init_reservoir

TOPOLOGIES = ("esn", "brc", "pbrc")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class TopologyEncoder:
    """One constructed topology bound to its config, input dim and pooling."""

    topology: str
    config: ReservoirConfig
    n_in: int
    pooling: str
    core: object

    @property
    def feature_dim(self):
        return {"esn": 1, "brc": 2, "pbrc": 4}[self.topology] * self.config.n_r

    def encode(self, frames, policy=None):
        policy = self.pooling if policy is None else policy
        if self.topology == "esn":
            return esn_encode(self.core, self.config, frames, policy)
        if self.topology == "brc":
            return bidir_encode(self.core, frames, policy)
        return pbrc_encode(self.core, frames, policy)


def build_encoder(topology, config, n_in, pooling="mean"):
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}, expected one of {TOPOLOGIES}")
    if pooling not in POOLING_POLICIES:
        raise ValueError(f"unknown pooling policy {pooling!r}")
    if topology == "esn":
        core = init_reservoir(config, n_in)
    elif topology == "brc":
        core = init_bidir(config, n_in)
    else:
        core = init_pbrc(config, n_in)
    return TopologyEncoder(topology=topology, config=config, n_in=n_in, pooling=pooling, core=core)


@dataclass(frozen=True)
class ModelArtifact:
    """Everything needed to reproduce predictions: encoder, norm stats, readout.

    ``resample`` > 0 records the fixed-T preprocessing length so inference
    repeats it; 0 means sequences were consumed at native length.
    """

    encoder: TopologyEncoder
    norm: NormStats
    readout: RidgeReadout
    resample: int = 0

    def predict_scores(self, frames):
        """Class scores for one raw (unnormalized) frame sequence."""
        frames = np.asarray(frames, dtype=np.float64)
        if self.resample > 0:
            frames = resample_frames(frames, self.resample)
        normalized = (frames - self.norm.mean) / self.norm.std
        return self.readout.w_out @ self.encoder.encode(normalized)


def _config_to_dict(config):
    return {
        "n_r": config.n_r,
        "alpha": config.alpha,
        "rho": config.rho,
        "input_scaling": config.input_scaling,
        "seed": config.seed,
        "washout": config.washout,
        "activation": config.activation,
    }


def _config_from_dict(doc):
    return ReservoirConfig(
        n_r=int(doc["n_r"]),
        alpha=float(doc["alpha"]),
        rho=float(doc["rho"]),
        input_scaling=float(doc["input_scaling"]),
        seed=int(doc["seed"]),
        washout=int(doc["washout"]),
        activation=str(doc["activation"]),
    )


def _brc_weights_to_dict(core):
    return {
        "w_in_f": core.w_in_f.tolist(),
        "w_in_b": core.w_in_b.tolist(),
        "w_r": core.w_r.tolist(),
    }


def _brc_weights_from_dict(doc, config):
    return BidirReservoir(
        w_r=np.asarray(doc["w_r"], dtype=np.float64),
        w_in_f=np.asarray(doc["w_in_f"], dtype=np.float64),
        w_in_b=np.asarray(doc["w_in_b"], dtype=np.float64),
        config=config,
    )


def _core_to_dict(encoder):
    core = encoder.core
    if encoder.topology == "esn":
        return {"w_in": core.w_in.tolist(), "w_r": core.w_r.tolist()}
    if encoder.topology == "brc":
        return _brc_weights_to_dict(core)
    return {"a": _brc_weights_to_dict(core.res_a), "b": _brc_weights_to_dict(core.res_b)}


def _core_from_dict(topology, doc, config):
    if topology == "esn":
        return ReservoirWeights(
            w_in=np.asarray(doc["w_in"], dtype=np.float64),
            w_r=np.asarray(doc["w_r"], dtype=np.float64),
        )
    if topology == "brc":
        return _brc_weights_from_dict(doc, config)
    return PbrcEncoder(
        res_a=_brc_weights_from_dict(doc["a"], config),
        res_b=_brc_weights_from_dict(doc["b"], replace(config, seed=config.seed + 1)),
    )


def save_model(artifact, path):
    doc = {
        "format_version": FORMAT_VERSION,
        "topology": artifact.encoder.topology,
        "pooling": artifact.encoder.pooling,
        "n_in": artifact.encoder.n_in,
        "resample": artifact.resample,
        "config": _config_to_dict(artifact.encoder.config),
        "weights": _core_to_dict(artifact.encoder),
        "norm": {"mean": artifact.norm.mean.tolist(), "std": artifact.norm.std.tolist()},
        "readout": {
            "classes": list(artifact.readout.classes),
            "lambda": artifact.readout.lam,
            "w_out": artifact.readout.w_out.tolist(),
        },
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise SchemaError(f"unsupported model format_version {version!r}")
    topology = doc["topology"]
    if topology not in TOPOLOGIES:
        raise SchemaError(f"unknown topology {topology!r} in model file")
    config = _config_from_dict(doc["config"])
    encoder = TopologyEncoder(
        topology=topology,
        config=config,
        n_in=int(doc["n_in"]),
        pooling=str(doc["pooling"]),
        core=_core_from_dict(topology, doc["weights"], config),
    )
    norm = NormStats(
        mean=np.asarray(doc["norm"]["mean"], dtype=np.float64),
        std=np.asarray(doc["norm"]["std"], dtype=np.float64),
    )
    readout = RidgeReadout(
        w_out=np.asarray(doc["readout"]["w_out"], dtype=np.float64),
        lam=float(doc["readout"]["lambda"]),
        classes=tuple(doc["readout"]["classes"]),
    )
    return ModelArtifact(
        encoder=encoder, norm=norm, readout=readout, resample=int(doc.get("resample", 0))
    )
