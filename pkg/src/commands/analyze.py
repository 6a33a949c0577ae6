"""
analyze: манифест когорты -> CSV отчётов, JSONL записи, карты
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from joblib import Parallel, delayed

from config.config import OUTPUT_DIR
from core.errors import DropoutQCError
from core.models import CaseManifest, CaseReport
from parsers import load_manifest, read_volume, write_report_records, write_reports_csv, write_volume
from parsers.csv_parser import save_errors_log
from uq.config import RunConfig
from uq.uncertainty import CaseAnalysis, SampleSet, analyze_case_full

from . import EXIT_OK, EXIT_PARTIAL, output_path

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser('analyze', help='Меры неопределённости по каждому случаю манифеста')
    parser.add_argument('--manifest', required=True, help='JSON манифест когорты')
    parser.add_argument('--out', help='CSV отчётов (по умолчанию <output_dir>/reports.csv)')
    parser.add_argument('--emit-maps', action='store_true', help='Записать консенсусную маску и карту U(x)')
    parser.add_argument('--threshold', type=float, help='Порог бинаризации')
    parser.add_argument('--jobs', type=int, help='Число параллельных процессов')
    parser.set_defaults(run=run)
    return parser


def analyze_manifest_case(case: CaseManifest,
                          config: RunConfig) -> Tuple[str, Optional[CaseAnalysis], Optional[str]]:
    """
    Обработать один случай в процессе-исполнителе. Ошибки случая не прерывают пакет.

    Returns:
        (case_id, анализ с картами или None, текст ошибки или None)
    """
    try:
        if case.missing:
            return case.case_id, None, f"отсутствуют файлы: {', '.join(case.missing)}"

        samples = SampleSet(tuple(read_volume(p) for p in case.samples), case.case_id)
        ground_truth = read_volume(case.ground_truth, as_mask=True) if case.ground_truth else None

        analysis = analyze_case_full(
            samples, ground_truth,
            threshold=config.threshold,
            entropy=config.entropy,
            cv=config.cv,
            split=case.split,
            group=case.group,
        )

        return case.case_id, analysis, None
    except (DropoutQCError, OSError) as e:
        return case.case_id, None, f"{type(e).__name__}: {e}"


def write_case_maps(analysis: CaseAnalysis, maps_dir: Path) -> None:
    case_id = analysis.report.case_id
    write_volume(analysis.consensus, maps_dir / f"{case_id}_consensus.nii.gz")
    write_volume(analysis.uncertainty.grid, maps_dir / f"{case_id}_uncertainty.nii.gz")


def run(args, config: RunConfig) -> int:
    if args.threshold is not None:
        config = config.model_copy(update={'threshold': args.threshold})
    jobs = args.jobs or config.jobs

    cases = load_manifest(args.manifest)
    out = output_path(args.out, config.output_dir, OUTPUT_DIR, 'reports.csv')
    maps_dir = out.parent / 'maps' if args.emit_maps else None
    if maps_dir is not None:
        maps_dir.mkdir(parents=True, exist_ok=True)

    for case in cases:
        if case.n_samples != config.expected_samples:
            logger.warning(f"[WARN] {case.case_id}: {case.n_samples} сэмплов, ожидалось {config.expected_samples}")

    logger.info(f"Анализ {len(cases)} случаев (jobs={jobs}, t={config.threshold})")
    # все файлы пишет только этот процесс; исполнители возвращают массивы
    results = Parallel(n_jobs=jobs, return_as="generator")(
        delayed(analyze_manifest_case)(case, config) for case in cases
    )

    reports: List[CaseReport] = []
    failures: Dict[str, str] = {}
    for case_id, analysis, error in results:
        if analysis is not None and maps_dir is not None:
            try:
                write_case_maps(analysis, maps_dir)
            except (DropoutQCError, OSError) as e:
                analysis, error = None, f"{type(e).__name__}: {e}"
        if analysis is not None:
            reports.append(analysis.report)
        else:
            logger.warning(f"[ERROR] Случай {case_id} пропущен: {error}")
            failures[case_id] = error

    write_reports_csv(reports, out)
    write_report_records(reports, out.with_suffix('.jsonl'))

    if failures:
        save_errors_log(failures, out.with_suffix('.failures.json'))
        logger.warning(f"Обработано {len(reports)}/{len(cases)} случаев, сбоев: {len(failures)}")
        return EXIT_PARTIAL

    logger.info(f"[SUCCESS] Обработано {len(reports)} случаев -> {out}")
    return EXIT_OK
