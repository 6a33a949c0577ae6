"""
synth: синтетическая когорта на диск (объёмы + манифест)
"""

import logging

from config.config import OUTPUT_DIR, SEED
from uq.config import SPLIT_COUNTS, RunConfig
from uq.synth import assign_splits, make_cohort, write_cohort

from . import EXIT_OK, output_path

logger = logging.getLogger(__name__)


def add_parser(subparsers):
    parser = subparsers.add_parser('synth', help='Сгенерировать синтетическую когорту')
    parser.add_argument('--out', help='Каталог когорты (по умолчанию <output_dir>/cohort)')
    parser.add_argument('--cases', type=int, help='Число случаев')
    parser.add_argument('--noise', type=float, nargs='+', help='Уровни boundary_sigma')
    parser.add_argument('--samples', type=int, help='Сэмплов на случай')
    parser.add_argument('--seed', type=int, help='Базовый сид')
    parser.add_argument('--jobs', type=int, help='Число параллельных процессов')
    parser.add_argument('--splits', action='store_true', help='Разметить train/validation/test')
    parser.set_defaults(run=run)
    return parser


def run(args, config: RunConfig) -> int:
    cohort = config.cohort
    updates = {}
    if args.cases is not None:
        updates['n_cases'] = args.cases
    if args.noise:
        updates['noise_grid'] = tuple(args.noise)
    if args.samples is not None:
        updates['n_samples'] = args.samples
    if args.seed is not None:
        updates['base_seed'] = args.seed
    elif SEED is not None:
        updates['base_seed'] = SEED
    if updates:
        cohort = cohort.model_validate({**cohort.model_dump(), **updates})

    cases = make_cohort(
        cohort.n_cases,
        noise_grid=cohort.noise_grid,
        dims=cohort.dims,
        base_seed=cohort.base_seed,
        n_samples=cohort.n_samples,
        prob_softness=cohort.prob_softness,
        flip_rate=cohort.flip_rate,
        jobs=args.jobs or config.jobs,
    )

    splits = None
    if args.splits:
        splits = assign_splits([c.case_id for c in cases], SPLIT_COUNTS, seed=cohort.base_seed)

    out_dir = output_path(args.out, config.output_dir, OUTPUT_DIR, 'cohort')
    manifest = write_cohort(cases, out_dir, splits)
    logger.info(f"[SUCCESS] Манифест: {manifest}")
    return EXIT_OK
