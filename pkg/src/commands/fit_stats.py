"""
fit-stats: статистики z-нормализации по обучающим КТ манифеста
"""

import json
import logging

from config.config import OUTPUT_DIR
from core.errors import InsufficientDataError
from parsers import load_manifest, read_volume
from uq.config import RunConfig
from uq.preprocess import fit_recipe_stats

from . import EXIT_OK, output_path
from .preprocess import RECIPES

logger = logging.getLogger(__name__)

TRAIN_SPLIT = 'train'


def add_parser(subparsers):
    parser = subparsers.add_parser('fit-stats', help='Статистики нормализации по обучающей выборке')
    parser.add_argument('--recipe', required=True, choices=RECIPES)
    parser.add_argument('--manifest', required=True, help='Манифест с полями ct (и liver_mask для tumor)')
    parser.add_argument('--out', help='JSON статистик (по умолчанию <output_dir>/<recipe>_stats.json)')
    parser.set_defaults(run=run)
    return parser


def run(args, config: RunConfig) -> int:
    cases = load_manifest(args.manifest)
    # при наличии разметки берётся только обучающая часть
    if any(c.split is not None for c in cases):
        cases = [c for c in cases if c.split == TRAIN_SPLIT]

    usable = []
    for case in cases:
        needs_mask = args.recipe == 'tumor'
        if case.ct is None or (needs_mask and case.liver_mask is None) or case.missing:
            logger.warning(f"[WARN] {case.case_id}: нет КТ или маски печени, случай пропущен")
            continue
        usable.append(case)
    if not usable:
        raise InsufficientDataError(f"{args.manifest}: нет случаев с КТ для рецепта {args.recipe}")

    cts = (read_volume(c.ct) for c in usable)
    masks = (read_volume(c.liver_mask, as_mask=True) for c in usable) if args.recipe == 'tumor' else None
    recipe = config.liver if args.recipe == 'liver' else config.tumor
    stats = fit_recipe_stats(args.recipe, cts, masks, recipe)

    out = output_path(args.out, config.output_dir, OUTPUT_DIR, f'{args.recipe}_stats.json')
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, 'w', encoding='utf-8') as f:
        json.dump(stats.model_dump(), f, indent=2, sort_keys=True)
        f.write('\n')

    logger.info(f"[SUCCESS] {args.recipe}: mean={stats.mean:.4f}, std={stats.std:.4f} -> {out}")
    return EXIT_OK
