"""
correlate: CSV отчётов -> таблица корреляций Спирмена с dice
"""

import logging

from config.config import OUTPUT_DIR
from core.errors import ReportFormatError
from parsers import ReportCSVParser
from parsers.csv_parser import write_correlation_csv
from uq.config import RunConfig
from uq.stats import GROUP_FIELDS, QUALITY_COLUMN, correlation_table

from . import EXIT_OK, output_path

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser('correlate', help='Корреляция мер неопределённости с dice')
    parser.add_argument('--reports', required=True, help='CSV отчётов (результат analyze)')
    parser.add_argument('--out', help='CSV корреляций (по умолчанию <output_dir>/correlation.csv)')
    parser.add_argument('--group-by', choices=GROUP_FIELDS, help='Отдельный блок на каждую метку')
    parser.add_argument('--method', choices=('t', 'permutation'), help='Метод p-value')
    parser.set_defaults(run=run)
    return parser


def run(args, config: RunConfig) -> int:
    parser = ReportCSVParser()
    if not parser.has_column(args.reports, QUALITY_COLUMN):
        raise ReportFormatError(f"{args.reports}: нет колонки '{QUALITY_COLUMN}'")
    if args.group_by and not parser.has_column(args.reports, args.group_by):
        raise ReportFormatError(f"{args.reports}: нет колонки '{args.group_by}' для группировки")

    reports, errors = parser.parse_reports(args.reports)
    if errors:
        logger.warning(f"[WARN] {len(errors)} строк отчёта пропущено")

    method = args.method or config.p_value_method
    table = correlation_table(reports, group_by=args.group_by, method=method)

    for row in table:
        label = f"[{row.group}] " if row.group is not None else ""
        logger.info(f"{label}{row.measure}: rho={row.rho:+.3f} (p={row.p_value:.2g}, n={row.n}, dropped={row.dropped})")

    out = output_path(args.out, config.output_dir, OUTPUT_DIR, 'correlation.csv')
    write_correlation_csv(table, out, with_group=args.group_by is not None)
    logger.info(f"[SUCCESS] Таблица корреляций: {out}")
    return EXIT_OK
