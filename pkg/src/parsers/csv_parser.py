"""
Report CSV Parser for DropoutQC
Чтение и запись таблиц отчётов - формат обмена между analyze / correlate / flag
"""

import json
import logging
import math
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import pandas as pd
from pydantic import ValidationError

from core.errors import ReportFormatError
from core.models import (
    OPTIONAL_REPORT_COLUMNS, REPORT_COLUMNS, CaseReport, CorrelationResult, FlaggedCase,
)

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Колонки, без которых строку нельзя восстановить в CaseReport
REQUIRED_COLUMNS = ['case_id', 'n_samples', 'cv', 'd_pw', 'u_labelled', 'consensus_voxels']
CORRELATION_COLUMNS = ['measure', 'rho', 'p_value', 'n', 'dropped']
FLOAT_FORMAT = '%.17g'


def _clean(value):
    """NaN/пустые ячейки pandas -> None"""
    if value is None:
        return None
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


class ReportCSVParser:
    """Парсер CSV отчётов по случаям"""

    def __init__(self):
        self.errors: List[str] = []

    def read_frame(self, csv_path: PathLike) -> pd.DataFrame:
        df = pd.read_csv(csv_path, dtype={'case_id': str, 'split': str, 'group': str})
        df.columns = df.columns.str.strip()
        return df

    def parse_reports(self, csv_path: PathLike) -> Tuple[List[CaseReport], List[str]]:
        """Парсит CSV отчётов

        Args:
            csv_path: Путь к CSV-файлу

        Returns:
            Tuple[List[CaseReport], List[str]]: Отчёты и ошибки по строкам
        """
        reports = []
        errors = []

        logger.info(f"Начинаю парсинг отчётов: {csv_path}")
        df = self.read_frame(csv_path)

        missing = [col for col in REQUIRED_COLUMNS if col not in df.columns]
        if missing:
            raise ReportFormatError(f"{csv_path}: отсутствуют обязательные колонки: {missing}")

        columns = [c for c in REPORT_COLUMNS + OPTIONAL_REPORT_COLUMNS if c in df.columns]
        for idx, row in enumerate(df[columns].to_dict(orient='records')):
            record = {key: _clean(value) for key, value in row.items()}
            try:
                reports.append(CaseReport.model_validate(record))
            except ValidationError as e:
                error_msg = f"Строка {idx + 2} ({record.get('case_id')}): {e.error_count()} ошибок валидации"
                logger.warning(error_msg)
                errors.append(error_msg)

        logger.info(f"Успешно распарсено {len(reports)} отчётов из {csv_path}")
        self.errors.extend(errors)
        return reports, errors

    def has_column(self, csv_path: PathLike, column: str) -> bool:
        return column in self.read_frame(csv_path).columns


def read_reports_csv(csv_path: PathLike) -> List[CaseReport]:
    """Строгое чтение: любая невалидная строка - ошибка формата"""
    reports, errors = ReportCSVParser().parse_reports(csv_path)
    if errors:
        raise ReportFormatError(f"{csv_path}: {len(errors)} невалидных строк, первая: {errors[0]}")
    return reports


def write_reports_csv(reports: Sequence[CaseReport], path: PathLike) -> None:
    """Записать отчёты, отсортированные по case_id"""
    path = Path(path)
    ordered = sorted(reports, key=lambda r: r.case_id)
    df = pd.DataFrame([r.to_row() for r in ordered], columns=REPORT_COLUMNS + OPTIONAL_REPORT_COLUMNS)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, na_rep='', float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Экспортировано {len(ordered)} отчётов в {path}")


def write_report_records(reports: Sequence[CaseReport], path: PathLike) -> None:
    """Структурированные записи по случаям (JSON lines)"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        for report in sorted(reports, key=lambda r: r.case_id):
            f.write(json.dumps(report.model_dump(mode='json'), sort_keys=True, ensure_ascii=False))
            f.write('\n')


def write_correlation_csv(results: Sequence[CorrelationResult], path: PathLike,
                          with_group: bool = False) -> None:
    columns = (['group', 'mean_quality'] if with_group else []) + CORRELATION_COLUMNS
    rows = [r.model_dump() for r in results]
    df = pd.DataFrame(rows, columns=columns)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, na_rep='', float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.info(f"Таблица корреляций записана: {path}")


def write_flagged_csv(flagged: Sequence[FlaggedCase], path: PathLike) -> None:
    rows = [{'case_id': f.case_id, 'reasons': ';'.join(f.reasons)} for f in flagged]
    df = pd.DataFrame(rows, columns=['case_id', 'reasons'])
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, lineterminator='\n')


def save_errors_log(errors: Dict[str, str], log_file: PathLike) -> bool:
    """Сохраняет список сбойных случаев

    Args:
        errors: case_id -> текст ошибки
        log_file: Файл для сохранения

    Returns:
        bool: Успешность операции
    """
    try:
        payload = {'failures': [{'case_id': k, 'error': errors[k]} for k in sorted(errors)]}
        with open(log_file, 'w', encoding='utf-8') as f:
            json.dump(payload, f, ensure_ascii=False, indent=2)
            f.write('\n')
        logger.info(f"Лог ошибок сохранен в {log_file}")
        return True
    except OSError as e:
        logger.error(f"Ошибка при сохранении лога ошибок: {str(e)}")
        return False


