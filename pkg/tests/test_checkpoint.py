import struct

import numpy as np
import pytest

from lkfmixer.checkpoint import (
    BadMagicError,
    CheckpointError,
    DuplicateNameError,
    TruncatedCheckpointError,
    UnsupportedDtypeError,
    UnsupportedVersionError,
    decode,
    encode,
    load_checkpoint,
    save_checkpoint,
)
from lkfmixer.model import ModelConfig, ParamStore, init_params
from lkfmixer.tensor import Tensor

CFG = ModelConfig(channels=8, n_fmb=2, kernel=7, scale=2)


def golden_two_tensors() -> bytes:
    # hand-assembled: "a" (1,1,1,2) = [1.0, -2.0], "bb" (1,1,1,1) = [0.5]
    return (
        b"LKFW"
        + b"\x01\x00\x00\x00"
        + b"\x02\x00\x00\x00"
        + b"\x01\x00" + b"a" + b"\x00" + b"\x04"
        + b"\x01\x00\x00\x00\x00\x00\x00\x00" * 3
        + b"\x02\x00\x00\x00\x00\x00\x00\x00"
        + b"\x00\x00\x80\x3f" + b"\x00\x00\x00\xc0"
        + b"\x02\x00" + b"bb" + b"\x00" + b"\x04"
        + b"\x01\x00\x00\x00\x00\x00\x00\x00" * 4
        + b"\x00\x00\x00\x3f"
    )


def test_golden_bytes():
    store = ParamStore(
        {"bb": Tensor(np.array([0.5]).reshape(1, 1, 1, 1)), "a": Tensor(np.array([1.0, -2.0]).reshape(1, 1, 1, 2))}
    )
    assert encode(store) == golden_two_tensors()
    back = decode(golden_two_tensors())
    assert list(back) == ["a", "bb"]
    assert back["a"].data.ravel().tolist() == [1.0, -2.0]


def test_empty_store_is_header_only():
    raw = encode(ParamStore())
    assert raw == b"LKFW" + struct.pack("<II", 1, 0)
    assert len(raw) == 12
    assert len(decode(raw)) == 0


def test_roundtrip_bitwise(tmp_path):
    store = init_params(CFG, 0)
    rng = np.random.default_rng(0)
    store["fmb0.fsb.gate.b"] = Tensor(rng.standard_normal((8, 1, 1, 1)))
    weird = np.array([np.nan, -0.0, np.inf, 1e-45], dtype=np.float32).reshape(1, 1, 2, 2)
    store["zz.weird"] = Tensor(weird)
    path = tmp_path / "m.lkfw"
    save_checkpoint(store, path)
    back = load_checkpoint(path)
    assert list(back) == list(store)
    for k in store:
        assert back[k].data.tobytes() == store[k].data.tobytes()
    assert encode(back) == path.read_bytes()


def _payload_offset(raw: bytes, target: str) -> int:
    pos = 12
    (count,) = struct.unpack_from("<I", raw, 8)
    for _ in range(count):
        (n,) = struct.unpack_from("<H", raw, pos)
        name = raw[pos + 2 : pos + 2 + n].decode()
        pos += 2 + n
        ndim = raw[pos + 1]
        dims = struct.unpack_from(f"<{ndim}Q", raw, pos + 2)
        pos += 2 + 8 * ndim
        if name == target:
            return pos
        pos += 4 * int(np.prod(dims))
    raise KeyError(target)


def test_corrupting_one_payload_byte_changes_one_element():
    store = init_params(CFG, 1)
    raw = bytearray(encode(store))
    target = "fmb1.fdb.ffb1.plkb.row.w"
    elem = 5
    off = _payload_offset(bytes(raw), target) + 4 * elem + 1
    raw[off] ^= 0xFF
    back = decode(bytes(raw))
    changed = []
    for k in store:
        diff = np.flatnonzero(back[k].data.view(np.uint32) != store[k].data.view(np.uint32))
        changed += [(k, int(i)) for i in diff]
    assert changed == [(target, elem)]


def test_distinct_errors():
    good = encode(init_params(CFG, 0))
    with pytest.raises(BadMagicError):
        decode(b"LKFX" + good[4:])
    with pytest.raises(UnsupportedVersionError):
        decode(good[:4] + struct.pack("<I", 2) + good[8:])
    with pytest.raises(TruncatedCheckpointError):
        decode(good[:-3])
    with pytest.raises(TruncatedCheckpointError):
        decode(good[:10])
    one = encode(ParamStore({"a": Tensor.ones((1, 1, 1, 1))}))
    dup = one[:8] + struct.pack("<I", 2) + one[12:] + one[12:]
    with pytest.raises(DuplicateNameError):
        decode(dup)
    bad_dtype = bytearray(one)
    bad_dtype[12 + 2 + 1] = 7
    with pytest.raises(UnsupportedDtypeError):
        decode(bytes(bad_dtype))
    with pytest.raises(CheckpointError):
        decode(one + b"\x00")
    kinds = {BadMagicError, UnsupportedVersionError, TruncatedCheckpointError, DuplicateNameError}
    assert len(kinds) == 4 and all(issubclass(k, CheckpointError) for k in kinds)


def test_float64_store_refused():
    with pytest.raises(UnsupportedDtypeError):
        encode(init_params(CFG, 0, dtype=np.float64))
