import hashlib
import random
import subprocess
import sys
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fuchsia_model.pkg import (
    DuplicatePath,
    InvalidPath,
    MetaArchive,
    MetaCorrupt,
    build_package,
    build_package_dir,
    check_path,
    merkle_root_hex,
    parse_meta,
    verify_files,
    verify_package,
)
from merkle_ref import reference_root

BOUNDARY_SIZES = [0, 1, 4095, 4096, 4097, 8192, 12288]

# content is bytes(i % 251 for i in range(size)); roots from merkle_ref.py
BOUNDARY_ROOTS = {
    0: "6e340b9cffb37a989ca544e6bb780a2c78901d3fb33738768511a30617afa01d",
    1: "96a296d224f285c67bee93c30f8a309157f0daa35dc5b87e410b78630a09cfc7",
    4095: "5d6b173f044ad9abfa7c7ed1d064a2581c0cf8a20a9829a5d18d6e47c3ebf163",
    4096: "c46b7e9f32bd7ac69139854bf809012fd58ea09765b26f84425175557b080a31",
    4097: "20d6edb4716923f423bc8d5ffbe4e0caff847f4f8edf46308de4ee9654f0f663",
    8192: "4199f3315bb6cef8ee8ff505ca35574761bab4cf7750c701ee452985e0bcc4c8",
    12288: "58d1f0c431a48972bd53f5c2e625fe7553ef83b4426dcec13d892b84914403d2",
}


def content(size: int) -> bytes:
    return bytes(i % 251 for i in range(size))


@pytest.mark.parametrize("size", BOUNDARY_SIZES)
def test_boundary_roots(size):
    assert merkle_root_hex(content(size)) == BOUNDARY_ROOTS[size]
    assert reference_root(content(size)) == BOUNDARY_ROOTS[size]


def test_reference_script_cli(tmp_path):
    f = tmp_path / "blob"
    f.write_bytes(content(4097))
    out = subprocess.run(
        [sys.executable, str(Path(__file__).parent / "merkle_ref.py"), str(f)], capture_output=True, text=True, check=True
    )
    assert out.stdout == BOUNDARY_ROOTS[4097] + "\n"


def test_small_trees_by_hand():
    h = lambda b: hashlib.sha256(b).digest()
    assert merkle_root_hex(b"") == h(b"\x00").hex()
    assert merkle_root_hex(b"a") == h(b"\x00a").hex()
    one, two = h(b"\x00" + b"x" * 4096), h(b"\x00y")
    assert merkle_root_hex(b"x" * 4096 + b"y") == h(b"\x01" + one + two).hex()


@given(st.integers(0, 40 * 4096))
@settings(max_examples=60, deadline=None)
def test_matches_reference_at_any_length(n):
    data = random.Random(n).randbytes(n)
    assert merkle_root_hex(data) == reference_root(data)


# --- paths ----------------------------------------------------------------------


@pytest.mark.parametrize(
    "bad", ["", "/abs", "a//b", "a/./b", "../x", "a/..", "meta/x", "meta", "a\\b", "nul\x00", "a/"]
)
def test_bad_paths(bad):
    with pytest.raises(InvalidPath):
        check_path(bad)


def test_good_paths():
    for p in ["bin/app", "lib/ld.so.1", "metadata", "data/meta/x"]:
        assert check_path(p) == p


def test_duplicate_paths():
    with pytest.raises(DuplicatePath):
        build_package("p", "0", [("a", b"1"), ("a", b"2")])


# --- meta -----------------------------------------------------------------------


def test_meta_format():
    pkg, meta = build_package("hello", "1", {"z": b"", "a/b": b"x"})
    assert meta.package == b'{"name":"hello","version":"1"}'
    assert meta.contents == f"a/b={merkle_root_hex(b'x')}\nz={merkle_root_hex(b'')}\n".encode()
    assert parse_meta(meta.package, meta.contents) == ("hello", "1", pkg.contents)


@pytest.mark.parametrize(
    "package, contents",
    [
        (b"not json", b""),
        (b'{"name":"x"}', b""),
        (b'{"name":"x","version":"1"}', b"a=zz\n"),
        (b'{"name":"x","version":"1"}', b"a=" + b"0" * 64),
        (b'{"name":"x","version":"1"}', b"../a=" + b"0" * 64 + b"\n"),
        (b'{"name":"x","version":"1"}', (b"a=" + b"0" * 64 + b"\n") * 2),
    ],
)
def test_corrupt_meta(package, contents):
    with pytest.raises(MetaCorrupt):
        parse_meta(package, contents)


# --- verify ---------------------------------------------------------------------


def random_files(rng: random.Random) -> dict:
    files = {}
    for i in range(rng.randint(1, 8)):
        depth = rng.randint(1, 3)
        path = "/".join(f"d{rng.randint(0, 3)}" for _ in range(depth - 1)) + ("/" if depth > 1 else "") + f"f{i}"
        files[path] = rng.randbytes(rng.choice([0, 1, 100, 4095, 4096, 4097, 9000]))
    return files


def test_verify_build_is_ok():
    rng = random.Random(1)
    for _ in range(30):
        files = random_files(rng)
        _, meta = build_package("p", "0", files)
        assert verify_files(meta, files).ok


def test_single_bit_tamper_names_the_path():
    rng = random.Random(2)
    for _ in range(40):
        files = random_files(rng)
        _, meta = build_package("p", "0", files)
        victims = [p for p, d in files.items() if d]
        if not victims:
            continue
        victim = rng.choice(victims)
        data = bytearray(files[victim])
        bit = rng.randrange(len(data) * 8)
        data[bit // 8] ^= 1 << (bit % 8)
        tampered = dict(files, **{victim: bytes(data)})
        report = verify_files(meta, tampered)
        assert report.failures() == [("Mismatch", victim)]


def test_missing_and_extra_files():
    files = {"a": b"1", "b": b"2"}
    _, meta = build_package("p", "0", files)
    report = verify_files(meta, {"a": b"1", "c": b"3"})
    assert report.failures() == [("MissingFile", "b"), ("ExtraFile", "c")]


def test_directory_round_trip(tmp_path):
    (tmp_path / "bin").mkdir()
    (tmp_path / "bin" / "app").write_bytes(b"\x7fELF")
    (tmp_path / "data.txt").write_bytes(b"hello")
    _, meta = build_package_dir(tmp_path, "demo", "2")
    assert (tmp_path / "meta" / "contents").read_bytes() == meta.contents
    assert verify_package(tmp_path).ok
    (tmp_path / "data.txt").write_bytes(b"hellp")
    assert verify_package(tmp_path).failures() == [("Mismatch", "data.txt")]


def test_directory_without_meta(tmp_path):
    with pytest.raises(MetaCorrupt):
        verify_package(tmp_path)


def test_meta_archive_files():
    _, meta = build_package("p", "0", {})
    assert set(meta.files()) == {"meta/package", "meta/contents"}
    assert isinstance(meta, MetaArchive) and meta.contents == b""
