"""
Parsers module
Volume, manifest and report parsers
"""

from .csv_parser import ReportCSVParser, read_reports_csv, write_reports_csv, write_report_records
from .manifest import load_manifest, write_manifest
from .volume_io import read_volume, read_volume_with_header, write_volume

__all__ = [
    'ReportCSVParser', 'read_reports_csv', 'write_reports_csv', 'write_report_records',
    'load_manifest', 'write_manifest',
    'read_volume', 'read_volume_with_header', 'write_volume',
]
