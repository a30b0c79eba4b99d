"""Self-describing binary model container.

Layout: 8-byte magic, u32 version, u32 section count, then named sections.
A section is a u16-length utf8 name, a kind byte (0 = float64 array,
1 = json blob), and the payload: arrays carry u8 ndim + u64 dims + raw
little-endian float64 data, blobs a u64 byte length + utf8 json. Writes go
through a temp file and an atomic rename so a crash never leaves a partial
model behind.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from stampkit.classifier import LinearModel
from stampkit.dictionary import AtomScores, Dictionary, RankedDictionary
from stampkit.whitening import WhiteningTransform

MAGIC = b"STAMPKIT"
VERSION = 1


@dataclass
class StampModel:
    """Everything a trained pipeline needs: preprocessing config, whitening,
    dictionary, ranking state, and the linear classifier."""

    config: dict = field(default_factory=dict)
    whitening: WhiteningTransform | None = None
    dictionary: Dictionary | None = None
    scores: AtomScores | None = None
    v: int | None = None
    svm: LinearModel | None = None

    @property
    def patch_side(self) -> int:
        return int(self.config["patch_side"])

    @property
    def resize_hw(self) -> tuple[int, int]:
        return int(self.config["resize_h"]), int(self.config["resize_w"])

    def ranked_dictionary(self) -> RankedDictionary:
        if self.dictionary is None or self.whitening is None:
            raise ValueError("model has no learned dictionary yet")
        scores = self.scores
        if scores is None:
            scores = AtomScores(
                scores=np.zeros(self.dictionary.k), rank=np.arange(self.dictionary.k)
            )
        v = self.v if self.v is not None else self.dictionary.k
        return RankedDictionary(
            dictionary=self.dictionary, scores=scores, v=v, whitening=self.whitening
        )

    def validate(self) -> None:
        m = int(self.config.get("patch_side", 0))
        if self.dictionary is not None:
            if self.dictionary.atoms.shape[1] != m * m:
                raise ValueError(
                    f"atom length {self.dictionary.atoms.shape[1]} != patch_side^2 = {m * m}"
                )
        if self.whitening is not None and self.whitening.dim != m * m:
            raise ValueError("whitening dimension does not match patch size")
        if self.scores is not None and self.dictionary is not None:
            if self.scores.scores.shape[0] != self.dictionary.k:
                raise ValueError("score count does not match atom count")
            if sorted(self.scores.rank.tolist()) != list(range(self.dictionary.k)):
                raise ValueError("rank is not a permutation of the atom indices")
        if self.v is not None and self.dictionary is not None:
            if not (1 <= self.v <= self.dictionary.k):
                raise ValueError(f"v={self.v} out of range")
        if self.svm is not None and self.v is not None:
            if self.svm.weights.shape[0] != 16 * self.v:
                raise ValueError(
                    f"classifier length {self.svm.weights.shape[0]} != 16*v = {16 * self.v}"
                )


def _pack_sections(model: StampModel) -> list[tuple[str, object]]:
    config = dict(model.config)
    if model.whitening is not None:
        config["zca_epsilon"] = model.whitening.epsilon
    if model.dictionary is not None:
        config["atom_count"] = model.dictionary.k
    if model.v is not None:
        config["v"] = int(model.v)
    if model.svm is not None:
        config["svm_bias"] = model.svm.bias
        config["svm_c"] = model.svm.c
    sections: list[tuple[str, object]] = [("config", config)]
    if model.whitening is not None:
        sections.append(("whitening/mean", model.whitening.mean))
        sections.append(("whitening/matrix", model.whitening.matrix))
    if model.dictionary is not None:
        sections.append(("dict/atoms", model.dictionary.atoms))
    if model.scores is not None:
        sections.append(("scores/values", model.scores.scores))
        sections.append(("scores/rank", model.scores.rank.astype(np.float64)))
    if model.svm is not None:
        sections.append(("svm/weights", model.svm.weights))
    return sections


def save_model(path, model: StampModel) -> None:
    """Validate and atomically write the model file."""
    model.validate()
    sections = _pack_sections(model)
    path = Path(path)
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<II", VERSION, len(sections))
    for name, payload in sections:
        raw_name = name.encode("utf-8")
        blob += struct.pack("<H", len(raw_name)) + raw_name
        if isinstance(payload, np.ndarray):
            arr = np.ascontiguousarray(payload, dtype="<f8")
            blob += struct.pack("<BB", 0, arr.ndim)
            blob += struct.pack(f"<{arr.ndim}Q", *arr.shape)
            blob += arr.tobytes()
        else:
            raw = json.dumps(payload, sort_keys=True).encode("utf-8")
            blob += struct.pack("<BQ", 1, len(raw))
            blob += raw
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path) -> StampModel:
    """Read and validate a model file written by save_model."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != MAGIC:
        raise ValueError(f"{path} is not a stampkit model file")
    version, n_sections = struct.unpack_from("<II", data, 8)
    if version != VERSION:
        raise ValueError(f"unsupported model version {version}")
    offset = 16
    sections: dict[str, object] = {}
    for _ in range(n_sections):
        (name_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        name = data[offset : offset + name_len].decode("utf-8")
        offset += name_len
        (kind,) = struct.unpack_from("<B", data, offset)
        offset += 1
        if kind == 0:
            (ndim,) = struct.unpack_from("<B", data, offset)
            offset += 1
            shape = struct.unpack_from(f"<{ndim}Q", data, offset)
            offset += 8 * ndim
            count = int(np.prod(shape)) if ndim else 1
            arr = np.frombuffer(data, dtype="<f8", count=count, offset=offset).reshape(shape)
            offset += 8 * count
            sections[name] = arr.astype(np.float64)
        elif kind == 1:
            (length,) = struct.unpack_from("<Q", data, offset)
            offset += 8
            sections[name] = json.loads(data[offset : offset + length].decode("utf-8"))
            offset += length
        else:
            raise ValueError(f"unknown section kind {kind} in {path}")
    if "config" not in sections:
        raise ValueError(f"model file {path} has no config section")
    config = sections["config"]
    model = StampModel(config=config)
    if "whitening/mean" in sections:
        model.whitening = WhiteningTransform(
            mean=sections["whitening/mean"],
            matrix=sections["whitening/matrix"],
            epsilon=float(config["zca_epsilon"]),
        )
    if "dict/atoms" in sections:
        side = int(config["patch_side"])
        model.dictionary = Dictionary(atom_side=side, atoms=sections["dict/atoms"])
    if "scores/values" in sections:
        model.scores = AtomScores(
            scores=sections["scores/values"],
            rank=sections["scores/rank"].astype(np.intp),
        )
    if "v" in config:
        model.v = int(config["v"])
    if "svm/weights" in sections:
        model.svm = LinearModel(
            weights=sections["svm/weights"],
            bias=float(config["svm_bias"]),
            c=float(config["svm_c"]),
        )
    model.validate()
    return model
