"""
Commands module
Подкоманды CLI: analyze, correlate, flag, synth, preprocess, fit-stats
"""

from pathlib import Path
from typing import Optional

# Коды возврата - стабильный контракт для скриптов
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_PARTIAL = 3


def output_path(explicit: Optional[str], output_dir: Optional[Path], default_dir: str, name: str) -> Path:
    """--out, иначе <output_dir>/<name>, иначе <UQ_OUTPUT_DIR>/<name>"""
    if explicit:
        return Path(explicit)
    return Path(output_dir or default_dir) / name


__all__ = ['EXIT_OK', 'EXIT_USAGE', 'EXIT_IO', 'EXIT_PARTIAL', 'output_path']
