"""Tests for configuration, the result cache, exporters and CLI parsing helpers."""

import csv
import io
import json

import numpy as np
import pytest
from openpyxl import load_workbook

from cache import Cache
from config import Config
from exporters import CSVExporter, ExcelExporter, JSONExporter, ResultTable, format_cell, get_exporter
from utils import format_duration, parse_grid, parse_range, parse_scan


class TestConfig:
    def test_defaults(self, monkeypatch):
        monkeypatch.delenv('KAC_ROOTS_WORKERS', raising=False)
        config = Config()
        assert config.workers >= 1
        assert config.chunk_size == 500
        assert config.use_cache is True
        assert config.output_format == 'csv'
        assert config.output_path is None

    def test_workers_from_environment(self, monkeypatch):
        monkeypatch.setenv('KAC_ROOTS_WORKERS', '3')
        assert Config().workers == 3

    def test_bad_workers_in_environment(self, monkeypatch):
        monkeypatch.setenv('KAC_ROOTS_WORKERS', 'many')
        with pytest.raises(ValueError):
            Config()

    def test_cache_dir_from_environment(self, monkeypatch, tmp_path):
        monkeypatch.setenv('KAC_ROOTS_CACHE_DIR', str(tmp_path / 'c'))
        assert Config().cache_dir == tmp_path / 'c'

    @pytest.mark.parametrize('kwargs', [
        {'workers': 0},
        {'chunk_size': 0},
        {'refine_tol': 0.0},
        {'quad_epsabs': 0.0},
        {'quad_limit': 0},
        {'output_format': 'xml'},
    ])
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Config(**kwargs)

    def test_save_and_load(self, tmp_path):
        path = tmp_path / 'conf' / 'kac.yaml'
        original = Config(workers=2, chunk_size=123, use_cache=False, cache_dir=tmp_path / 'cache',
                          output_format='json')
        original.save(path)
        loaded = Config.from_file(path)
        assert loaded.workers == 2
        assert loaded.chunk_size == 123
        assert loaded.use_cache is False
        assert loaded.cache_dir == tmp_path / 'cache'
        assert loaded.output_format == 'json'

    def test_unknown_keys_are_dropped(self, tmp_path):
        path = tmp_path / 'kac.yml'
        path.write_text('chunk_size: 50\nnot_a_setting: 1\n', encoding='utf-8')
        assert Config.from_file(path).chunk_size == 50

    def test_empty_file_gives_defaults(self, tmp_path):
        path = tmp_path / 'empty.yaml'
        path.write_text('', encoding='utf-8')
        assert Config.from_file(path).chunk_size == 500

    def test_invalid_value_in_file(self, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text('output_format: xml\n', encoding='utf-8')
        with pytest.raises(ValueError):
            Config.from_file(path)

    def test_non_mapping_file(self, tmp_path):
        path = tmp_path / 'list.yaml'
        path.write_text('- 1\n- 2\n', encoding='utf-8')
        with pytest.raises(ValueError):
            Config.from_file(path)

    def test_wrong_extension(self, tmp_path):
        path = tmp_path / 'config.txt'
        path.write_text('workers: 1\n', encoding='utf-8')
        with pytest.raises(ValueError):
            Config.from_file(path)
        with pytest.raises(ValueError):
            Config().save(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            Config.from_file(tmp_path / 'absent.yaml')


class TestCache:
    def test_set_get_overwrite(self, tmp_path):
        cache = Cache(tmp_path)
        cache.set('k', {'counts': [1, 2, 3]})
        assert cache.get('k') == {'counts': [1, 2, 3]}
        cache.set('k', {'counts': [4]})
        assert cache.get('k') == {'counts': [4]}
        assert len(list(tmp_path.glob('*.json'))) == 1

    def test_miss(self, tmp_path):
        assert Cache(tmp_path).get('nothing') is None

    def test_expired_entry(self, tmp_path):
        cache = Cache(tmp_path)
        cache.set('old', {'x': 1}, ttl=-1)
        assert cache.get_stats()['expired_entries'] == 1
        assert cache.get('old') is None
        assert cache.get_stats()['total_entries'] == 0

    def test_corrupt_entry_is_discarded(self, tmp_path):
        cache = Cache(tmp_path)
        cache.set('k', {'x': 1})
        next(tmp_path.glob('*.json')).write_text('{not json', encoding='utf-8')
        assert cache.get('k') is None
        assert cache.get_stats()['total_entries'] == 0

    def test_make_key_ignores_ordering(self):
        first = Cache.make_key('ensemble', {'n': 10, 'seed': 1})
        second = Cache.make_key('ensemble', {'seed': 1, 'n': 10})
        assert first == second
        assert first != Cache.make_key('total', {'n': 10, 'seed': 1})

    def test_clear_and_stats(self, tmp_path):
        cache = Cache(tmp_path)
        for i in range(3):
            cache.set(f'k{i}', {'i': i})
        stats = cache.get_stats()
        assert stats['total_entries'] == 3
        assert stats['valid_entries'] == 3
        assert stats['total_size_bytes'] > 0
        assert cache.clear() == 3
        assert cache.get_stats()['total_entries'] == 0


def _table():
    return ResultTable(
        columns=['v', 'count', 'density'],
        rows=[[-1.0, 3, 0.1 + 0.2], [0.5, np.int64(7), np.float64(1.0 / 3.0)]],
        metadata={'n': 100, 'window': [-1.0, 1.0]},
    )


class TestResultTable:
    def test_rejects_ragged_rows(self):
        with pytest.raises(ValueError):
            ResultTable(columns=['a', 'b'], rows=[[1]])
        table = ResultTable(columns=['a', 'b'])
        with pytest.raises(ValueError):
            table.append([1, 2, 3])
        table.append([1, 2])
        assert table.records() == [{'a': 1, 'b': 2}]

    def test_format_cell(self):
        assert format_cell(None) == ''
        assert format_cell(np.float64(0.1)) == '0.1'
        assert format_cell(np.int64(4)) == '4'
        assert float(format_cell(1.0 / 3.0)) == 1.0 / 3.0


class TestExporters:
    def test_csv_round_trips_floats(self, tmp_path, serial_config):
        path = CSVExporter(serial_config).export(_table(), tmp_path / 'out' / 'table.csv')
        text = path.read_text(encoding='utf-8')
        assert '\r' not in text
        rows = list(csv.reader(io.StringIO(text)))
        assert rows[0] == ['v', 'count', 'density']
        assert float(rows[1][2]) == 0.1 + 0.2
        assert rows[2][1] == '7'
        assert float(rows[2][2]) == 1.0 / 3.0

    def test_csv_to_stdout(self, capsys, serial_config):
        assert CSVExporter(serial_config).export(_table()) is None
        assert capsys.readouterr().out.splitlines()[0] == 'v,count,density'

    def test_csv_is_reproducible(self, tmp_path, serial_config):
        exporter = CSVExporter(serial_config)
        first = exporter.export(_table(), tmp_path / 'a.csv').read_bytes()
        second = exporter.export(_table(), tmp_path / 'b.csv').read_bytes()
        assert first == second

    def test_json_structure(self, tmp_path, serial_config):
        path = JSONExporter(serial_config).export(_table(), tmp_path / 'table.json')
        data = json.loads(path.read_text(encoding='utf-8'))
        assert data['columns'] == ['v', 'count', 'density']
        assert data['metadata'] == {'n': 100, 'window': [-1.0, 1.0]}
        assert data['rows'][1] == {'v': 0.5, 'count': 7, 'density': 1.0 / 3.0}

    def test_excel_sheets(self, tmp_path, serial_config):
        path = ExcelExporter(serial_config).export(_table(), tmp_path / 'table.xlsx')
        wb = load_workbook(path)
        assert wb.sheetnames == ['Results', 'Metadata']
        results = list(wb['Results'].iter_rows(values_only=True))
        assert results[0] == ('v', 'count', 'density')
        assert results[2][1] == 7
        metadata = dict(list(wb['Metadata'].iter_rows(values_only=True))[1:])
        assert metadata['n'] == 100
        assert json.loads(metadata['window']) == [-1.0, 1.0]

    def test_excel_needs_path(self, serial_config):
        with pytest.raises(ValueError):
            ExcelExporter(serial_config).export(_table())

    def test_get_exporter(self, serial_config):
        assert isinstance(get_exporter('json', serial_config), JSONExporter)
        with pytest.raises(ValueError):
            get_exporter('xml', serial_config)


class TestParsing:
    def test_parse_range(self):
        assert parse_range('-15:15') == (-15.0, 15.0)

    @pytest.mark.parametrize('text', ['1:1', '2:1', '0:1:2', 'a:b', '0:inf'])
    def test_parse_range_rejects(self, text):
        with pytest.raises(ValueError):
            parse_range(text)

    def test_parse_grid(self):
        np.testing.assert_allclose(parse_grid('-1:1:5'), [-1.0, -0.5, 0.0, 0.5, 1.0])
        np.testing.assert_array_equal(parse_grid('0:0:1'), [0.0])

    def test_parse_scan(self):
        values = parse_scan('0:8:0.1')
        assert len(values) == 81
        assert 1.2 in values.tolist()
        assert values[-1] == 8.0
        np.testing.assert_array_equal(parse_scan('1:1:0.5'), [1.0])

    @pytest.mark.parametrize('text', ['0:1:0', '1:0:0.1', '0:1'])
    def test_parse_scan_rejects(self, text):
        with pytest.raises(ValueError):
            parse_scan(text)

    def test_format_duration(self):
        assert format_duration(1.234) == '1.23s'
        assert format_duration(125.3) == '2m 05.3s'
