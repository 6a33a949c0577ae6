"""
flag: отбор случаев на ручную проверку по политике порогов
"""

import json
import logging
from pathlib import Path
from typing import List, Sequence, Union

from pydantic import ValidationError

from config.config import OUTPUT_DIR
from core.errors import PolicyError
from core.models import MEASURE_FLAG_DIRECTION, CaseReport, CombineMode, FlaggedCase, FlagPolicy
from parsers import ReportCSVParser
from parsers.csv_parser import write_flagged_csv
from uq.config import RunConfig

from . import EXIT_OK, output_path

logger = logging.getLogger(__name__)

UNDEFINED_REASON = "undefined-measure"


def add_parser(subparsers):
    parser = subparsers.add_parser('flag', help='Отметить случаи для ручной проверки')
    parser.add_argument('--reports', required=True, help='CSV отчётов (результат analyze)')
    parser.add_argument('--policy', required=True, help='JSON политика: {"rules": [...], "mode": "any|all"}')
    parser.add_argument('--out', help='CSV отмеченных случаев (по умолчанию <output_dir>/flagged.csv)')
    parser.set_defaults(run=run)
    return parser


def load_policy(path: Union[str, Path]) -> FlagPolicy:
    """Загрузить политику; правила с нетипичным направлением дают предупреждение"""
    path = Path(path)
    try:
        with open(path, 'r', encoding='utf-8') as f:
            raw = json.load(f)
        policy = FlagPolicy.model_validate(raw)
    except json.JSONDecodeError as e:
        raise PolicyError(f"{path}: некорректный JSON ({e})")
    except ValidationError as e:
        raise PolicyError(f"{path}: некорректная политика: {e}")

    for rule in policy.rules:
        expected = MEASURE_FLAG_DIRECTION[rule.measure]
        if rule.comparator.value != expected:
            logger.warning(
                f"[WARN] Правило '{rule.describe()}': низкое качество обычно соответствует "
                f"{rule.measure.value} {expected}"
            )
    return policy


def flag_cases(reports: Sequence[CaseReport], policy: FlagPolicy) -> List[FlaggedCase]:
    """
    Применить политику к отчётам.

    Случай с неопределённой мерой (u_labelled = None) отмечается всегда
    с причиной 'undefined-measure'.
    """
    flagged = []
    for report in sorted(reports, key=lambda r: r.case_id):
        reasons = []
        undefined = report.u_labelled is None
        triggered = []
        for rule in policy.rules:
            value = report.measure(rule.measure)
            triggered.append(value is not None and rule.triggered(value))

        if policy.mode == CombineMode.ALL:
            hit = all(triggered)
        else:
            hit = any(triggered)
        if hit:
            reasons.extend(rule.describe() for rule, t in zip(policy.rules, triggered) if t)
        if undefined:
            reasons.append(UNDEFINED_REASON)
        if reasons:
            flagged.append(FlaggedCase(case_id=report.case_id, reasons=reasons))
    return flagged


def run(args, config: RunConfig) -> int:
    policy = load_policy(args.policy)
    reports, errors = ReportCSVParser().parse_reports(args.reports)
    if errors:
        logger.warning(f"[WARN] {len(errors)} строк отчёта пропущено")

    flagged = flag_cases(reports, policy)
    out = output_path(args.out, config.output_dir, OUTPUT_DIR, 'flagged.csv')
    write_flagged_csv(flagged, out)
    logger.info(f"[SUCCESS] Отмечено {len(flagged)} из {len(reports)} случаев -> {out}")
    return EXIT_OK
