import csv
import json
import math

import numpy as np
import pytest

from fblsc.errors import OutputError
from fblsc.models import CurveRow, ExampleId
from fblsc.output import emit_curve, emit_json, format_value, to_jsonable


class TestFormat:
    def test_twelve_significant_digits(self):
        assert format_value(math.pi) == '3.14159265359'
        assert format_value(7) == '7'
        assert format_value(True) == '1'

    def test_sentinels(self):
        assert format_value(math.inf) == 'inf'
        assert format_value(-math.inf) == '-inf'
        assert format_value(math.nan) == 'nan-flag'


class TestEmitCurve:
    def test_single_row_file(self, tmp_path):
        path = tmp_path / 'curve.csv'
        emit_curve([CurveRow(100, {'rate': 0.5})], str(path), 'n')
        lines = path.read_text(encoding='utf-8').splitlines()
        assert lines == ['n,rate', '100,0.5']

    def test_values_parse_back(self, tmp_path):
        path = tmp_path / 'curve.csv'
        values = np.random.default_rng(1).uniform(-5, 5, size=10)
        emit_curve([CurveRow(i, {'a': v}) for i, v in enumerate(values)], str(path))
        with open(path, encoding='utf-8') as handle:
            parsed = [float(row['a']) for row in csv.DictReader(handle)]
        np.testing.assert_allclose(parsed, values, rtol=1e-11)

    def test_sentinel_cells(self, tmp_path):
        path = tmp_path / 'curve.csv'
        emit_curve([CurveRow(0.1, {'L2_min': -math.inf, 'flag': math.nan})], str(path), 'L1')
        assert path.read_text(encoding='utf-8').splitlines()[1] == '0.1,-inf,nan-flag'

    def test_column_mismatch(self, tmp_path):
        rows = [CurveRow(1, {'a': 1.0}), CurveRow(2, {'b': 1.0})]
        with pytest.raises(OutputError):
            emit_curve(rows, str(tmp_path / 'x.csv'))

    def test_no_rows(self, tmp_path):
        with pytest.raises(OutputError):
            emit_curve([], str(tmp_path / 'x.csv'))

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OutputError) as info:
            emit_curve([CurveRow(1, {'a': 1.0})], str(tmp_path / 'missing' / 'x.csv'))
        assert info.value.exit_code == 4

    def test_stdout(self, capsys):
        emit_curve([CurveRow(1, {'a': 2.0})], None)
        assert capsys.readouterr().out == 'x,a\n1,2\n'


class TestEmitJson:
    def test_sorted_keys_and_plain_types(self, tmp_path):
        path = tmp_path / 'doc.json'
        emit_json({'b': np.float64(0.25), 'a': ExampleId.BMS, 'c': np.arange(3)}, str(path))
        text = path.read_text(encoding='utf-8')
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {'a': 'bms', 'b': 0.25, 'c': [0, 1, 2]}

    def test_non_finite_values(self):
        assert to_jsonable([math.inf, math.nan]) == ['inf', 'nan-flag']
