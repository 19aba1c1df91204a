import json
import math
from fractions import Fraction

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from srlp_lab.serialize import csv_text, dumps, table_text


def test_dumps_special_values():
    text = dumps({"a": math.inf, "b": math.nan, "c": Fraction(3, 7), "d": np.float64(0.5), "e": [1, 2]})
    data = json.loads(text)
    assert data == {"a": "inf", "b": "nan", "c": "3/7", "d": 0.5, "e": [1, 2]}
    assert '"d": 5.000000000000e-01' in text


def test_dumps_keeps_key_order():
    text = dumps({"z": 1, "a": {"y": [], "b": {}}})
    assert text.index('"z"') < text.index('"a"') < text.index('"y"')


def test_csv_and_table():
    assert csv_text(["n", "v"], [(1, 0.25)]) == "n,v\n1,2.500000000000e-01\n"
    t = table_text(["n", "value"], [(1, 0.25), (10, Fraction(1, 3))], title="x")
    assert t.splitlines()[0] == "x" and t.splitlines()[-1].endswith("1/3")


@given(st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), max_size=20))
def test_float_round_trip_to_twelve_digits(xs):
    back = json.loads(dumps({"xs": xs}))["xs"]
    for a, b in zip(xs, back):
        assert b == a or abs(b - a) <= 1e-12 * abs(a)
