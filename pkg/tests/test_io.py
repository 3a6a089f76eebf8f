import math

import numpy as np
from hypothesis import given, strategies as st

from srlaser import io

floats = st.floats(allow_nan=False, width=64)


@given(rows=st.lists(st.tuples(floats, floats), min_size=1, max_size=20))
def test_float_round_trip_is_exact(rows, tmp_path_factory):
    path = tmp_path_factory.mktemp("io") / "x.csv"
    io.write_csv(path, "test", ["a", "b"], rows, meta={"params_hz": {"g_hz": 1.5}})
    meta, cols = io.read_csv(path)
    assert meta["schema"] == io.schema_id("test")
    assert meta["params_hz"] == {"g_hz": 1.5}
    np.testing.assert_array_equal(cols["a"], [r[0] for r in rows])
    np.testing.assert_array_equal(cols["b"], [r[1] for r in rows])


def test_special_values_and_text(tmp_path):
    path = io.write_columns(tmp_path / "y.csv", "test", {"v": [math.nan, math.inf, 1], "flag": [True, False, True],
                                                         "branch": ["A", "B", "A"]})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "# schema: srlaser.test/v1"
    assert lines[1] == "v,flag,branch"
    assert lines[2] == "nan,1,A"
    _, cols = io.read_csv(path)
    assert math.isnan(cols["v"][0]) and cols["v"][1] == math.inf
    assert list(cols["branch"]) == ["A", "B", "A"]


def test_json_handles_numpy_and_infinities(tmp_path):
    io.write_json(tmp_path / "m.json", {"a": np.float64(2.5), "b": [np.int64(3)], "c": math.inf})
    assert io.dumps({"b": 1, "a": np.float64(2.5)}) == '{"a": 2.5, "b": 1}'
    assert '"c": "inf"' in (tmp_path / "m.json").read_text()
