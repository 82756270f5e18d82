"""
Export modules for kac-roots result tables.

Supports CSV (the plotting interface), JSON and Excel. Text formats carry no
timestamps so that reruns of a seeded command reproduce the file byte for
byte.
"""

import csv
import json
import logging
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO

import numpy as np
from openpyxl import Workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter

from config import Config


@dataclass
class ResultTable:
    """Fixed-header rows plus metadata describing how they were produced."""

    columns: Sequence[str]
    rows: List[Sequence[Any]] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        for i, row in enumerate(self.rows):
            if len(row) != len(self.columns):
                raise ValueError(f"row {i} has {len(row)} cells, expected {len(self.columns)}")

    def append(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} cells, expected {len(self.columns)}")
        self.rows.append(row)

    def records(self) -> List[Dict[str, Any]]:
        return [dict(zip(self.columns, (plain(v) for v in row))) for row in self.rows]


def plain(value: Any) -> Any:
    """Convert numpy scalars to the builtin types whose str() round-trips."""
    if isinstance(value, np.generic):
        return value.item()
    return value


def format_cell(value: Any) -> str:
    """CSV text of one cell; floats use repr, the shortest exact round trip."""
    value = plain(value)
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


class BaseExporter(ABC):
    """Base class for all exporters."""

    extension = ''

    def __init__(self, config: Config):
        """
        Initialize exporter.

        Args:
            config: Configuration object
        """
        self.config = config
        self.logger = logging.getLogger(self.__class__.__name__)

    def export(self, table: ResultTable, output: Optional[Path] = None) -> Optional[Path]:
        """
        Export a table to a file, or to standard output when no path is given.

        Returns:
            Path to the created file, or None for standard output
        """
        if output is None:
            self.write(table, sys.stdout)
            sys.stdout.flush()
            return None
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, 'w', newline='', encoding='utf-8') as f:
            self.write(table, f)
        self.logger.info(f"Exported {self.extension.upper()} file: {output}")
        return output

    @abstractmethod
    def write(self, table: ResultTable, stream: TextIO) -> None:
        """Write table to an open text stream."""


class CSVExporter(BaseExporter):
    """Export results to CSV: fixed header, UTF-8, '\\n' line endings."""

    extension = 'csv'

    def write(self, table: ResultTable, stream: TextIO) -> None:
        writer = csv.writer(stream, lineterminator='\n')
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([format_cell(v) for v in row])


class JSONExporter(BaseExporter):
    """Export results to JSON: rows as objects plus metadata."""

    extension = 'json'

    def write(self, table: ResultTable, stream: TextIO) -> None:
        export_data = {
            'metadata': {k: plain(v) for k, v in table.metadata.items()},
            'columns': list(table.columns),
            'rows': table.records(),
        }
        json.dump(export_data, stream, indent=2, ensure_ascii=False)
        stream.write('\n')


class ExcelExporter(BaseExporter):
    """Export results to Excel format with a styled header and a metadata sheet."""

    extension = 'xlsx'

    def export(self, table: ResultTable, output: Optional[Path] = None) -> Optional[Path]:
        if output is None:
            raise ValueError("Excel output needs a file path (--output)")
        output = Path(output)
        output.parent.mkdir(parents=True, exist_ok=True)

        wb = Workbook()
        self._create_results_sheet(wb, table)
        self._create_metadata_sheet(wb, table)
        wb.save(output)
        self.logger.info(f"Exported Excel file: {output}")
        return output

    def write(self, table: ResultTable, stream: TextIO) -> None:
        raise ValueError("Excel output cannot be written to a text stream")

    def _create_results_sheet(self, wb: Workbook, table: ResultTable) -> None:
        ws = wb.active
        ws.title = "Results"
        ws.append(list(table.columns))

        header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
        header_font = Font(bold=True, color="FFFFFF", size=11)
        for cell in ws[1]:
            cell.fill = header_fill
            cell.font = header_font
            cell.alignment = Alignment(horizontal='center', vertical='center')

        for row in table.rows:
            ws.append([plain(v) for v in row])

        for i, name in enumerate(table.columns, start=1):
            ws.column_dimensions[get_column_letter(i)].width = max(len(str(name)) + 2, 22)
        ws.freeze_panes = 'A2'

    def _create_metadata_sheet(self, wb: Workbook, table: ResultTable) -> None:
        ws = wb.create_sheet("Metadata")
        ws.append(['Key', 'Value'])
        for cell in ws[1]:
            cell.font = Font(bold=True)
        for key, value in table.metadata.items():
            value = plain(value)
            if isinstance(value, (list, tuple, dict)):
                value = json.dumps(value)
            ws.append([key, value])
        ws.column_dimensions['A'].width = 30
        ws.column_dimensions['B'].width = 40


EXPORTERS = {
    'csv': CSVExporter,
    'json': JSONExporter,
    'excel': ExcelExporter,
}


def get_exporter(output_format: str, config: Config) -> BaseExporter:
    """Exporter instance for 'csv', 'json' or 'excel'."""
    try:
        return EXPORTERS[output_format](config)
    except KeyError:
        raise ValueError(f"Unknown output format {output_format!r}; choose from {sorted(EXPORTERS)}")
