import json
import zlib
from datetime import date

import numpy as np
import pytest

from smogcast.core.container import PREAMBLE
from smogcast.core.exceptions import DataError, FormatError
from smogcast.datapipe.cube import DatasetCube, ingest, iso_dates, to_date, to_days, write_cube


def make_cube(rng, t=4, h=3, w=5, c=2, cadence=5):
    start = to_days(date(2019, 1, 1))
    return DatasetCube(
        values=rng.normal(size=(t, h, w, c)),
        time_axis=[start + cadence * i for i in range(t)],
        feature_names=[f"F{i}" for i in range(c)],
        units=["1"] * c,
    )


def test_round_trip_preserves_values_and_header(tmp_path, rng):
    cube = make_cube(rng)
    cube.values[1, 2, 3, 0] = np.nan

    back = ingest(write_cube(tmp_path / "c.smgd", cube))

    np.testing.assert_array_equal(back.values, cube.values)
    assert back.time_axis == cube.time_axis
    assert back.feature_names == cube.feature_names
    assert back.bbox == pytest.approx(cube.bbox)
    assert back.cadence_days == 5
    assert np.isnan(back.values[1, 2, 3, 0])


def test_writes_are_byte_stable(tmp_path, rng):
    cube = make_cube(rng)
    assert write_cube(tmp_path / "a.smgd", cube).read_bytes() == write_cube(tmp_path / "b.smgd", cube).read_bytes()


def test_payload_is_little_endian_binary32(tmp_path, rng):
    cube = make_cube(rng, t=1, h=1, w=1, c=2)
    raw = write_cube(tmp_path / "c.smgd", cube).read_bytes()
    assert raw[:4] == b"SMGD"
    np.testing.assert_array_equal(np.frombuffer(raw[-8:], dtype="<f4"), cube.values.ravel())


def golden_fixture_bytes():
    """20 frames of 8x8 with 6 features; each value spells its index as t*1000 + i*100 + j*10 + f"""
    t, i, j, f = np.meshgrid(np.arange(20), np.arange(8), np.arange(8), np.arange(6), indexing="ij")
    values = (t * 1000 + i * 100 + j * 10 + f).astype("<f4")
    header = {
        "bbox": [67.3, 5.9, 100.6, 37.5],
        "dims": [20, 8, 8, 6],
        "feature_names": ["SO2", "NO2", "CH4", "O3", "CO", "HCHO"],
        "missing": "NaN",
        "time_axis": [to_days(date(2019, 1, 1)) + 5 * k for k in range(20)],
        "units": ["mol/m2"] * 6,
    }
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return PREAMBLE.pack(b"SMGD", 1, len(header_bytes)) + header_bytes + values.tobytes()


def test_golden_fixture_checksums(tmp_path):
    path = tmp_path / "golden.smgd"
    path.write_bytes(golden_fixture_bytes())

    cube = ingest(path, cadence_days=5)

    assert cube.shape == (20, 8, 8, 6)
    values = cube.values.astype(np.float64)
    assert values.sum() == 75_936_000
    assert values.sum(axis=(0, 1, 2)).tolist() == [12_652_800 + 1280 * f for f in range(6)]
    assert values.sum(axis=(1, 2, 3)).tolist() == [384_000 * t + 148_800 for t in range(20)]
    assert values[7, 3, 5, 4] == 7354
    rewritten = write_cube(tmp_path / "again.smgd", cube).read_bytes()
    assert zlib.crc32(rewritten) == zlib.crc32(path.read_bytes())


def test_dates(rng):
    cube = make_cube(rng, t=3)
    assert cube.dates() == ["2019-01-01", "2019-01-06", "2019-01-11"]
    assert to_date(to_days(date(2023, 2, 28))) == date(2023, 2, 28)
    assert iso_dates([0]) == ["1970-01-01"]


@pytest.mark.parametrize("damage", ["magic", "truncated", "trailing", "version"])
def test_damaged_containers(tmp_path, rng, damage):
    path = write_cube(tmp_path / "c.smgd", make_cube(rng))
    raw = path.read_bytes()
    raw = {
        "magic": b"XXXX" + raw[4:],
        "truncated": raw[:-8],
        "trailing": raw + b"\x00" * 4,
        "version": raw[:4] + (2).to_bytes(4, "little") + raw[8:],
    }[damage]
    path.write_bytes(raw)
    with pytest.raises(FormatError):
        ingest(path)


def test_header_dims_must_agree(tmp_path, rng):
    path = write_cube(tmp_path / "c.smgd", make_cube(rng))
    raw = path.read_bytes()
    _, _, length = PREAMBLE.unpack_from(raw, 0)
    header = raw[PREAMBLE.size:PREAMBLE.size + length].replace(b'"dims":[4,', b'"dims":[9,')
    path.write_bytes(raw[:PREAMBLE.size] + header + raw[PREAMBLE.size + length:])
    with pytest.raises(FormatError):
        ingest(path)


def test_cadence_is_validated(tmp_path, rng):
    cube = make_cube(rng)
    path = write_cube(tmp_path / "c.smgd", cube)
    with pytest.raises(DataError):
        ingest(path, cadence_days=1)
    with pytest.raises(DataError):
        DatasetCube(cube.values, [0, 5, 11, 15], cube.feature_names, cube.units)
    with pytest.raises(DataError):
        DatasetCube(cube.values, [0, 5, 5, 10], cube.feature_names, cube.units)


def test_cube_shape_checks(rng):
    with pytest.raises(DataError):
        DatasetCube(rng.normal(size=(2, 3, 3)), [0, 5], ["A"], ["1"])
    with pytest.raises(DataError):
        DatasetCube(rng.normal(size=(2, 3, 3, 1)), [0, 5, 10], ["A"], ["1"])
    with pytest.raises(DataError):
        DatasetCube(rng.normal(size=(2, 3, 3, 2)), [0, 5], ["A"], ["1"])
