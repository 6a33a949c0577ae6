"""
preprocess: рецепты печени и опухоли для одной КТ
"""

import json
import logging
from pathlib import Path

from config.config import OUTPUT_DIR
from core.errors import UsageError
from parsers import read_volume, write_volume
from uq.config import RunConfig
from uq.preprocess import preprocess_liver, preprocess_tumor

from . import EXIT_OK, output_path

logger = logging.getLogger(__name__)

RECIPES = ('liver', 'tumor')
RECIPE_ORDER = {
    'liver': ['resample', 'window', 'zscore'],
    'tumor': ['crop', 'fill/window', 'resample', 'zscore'],
}


def add_parser(subparsers):
    parser = subparsers.add_parser('preprocess', help='Предобработка КТ по рецепту')
    parser.add_argument('--recipe', required=True, choices=RECIPES)
    parser.add_argument('--ct', required=True, help='КТ в HU')
    parser.add_argument('--liver-mask', help='Маска печени (обязательна для рецепта tumor)')
    parser.add_argument('--out', help='Выходной объём (по умолчанию <output_dir>/<recipe>.nii.gz)')
    parser.set_defaults(run=run)
    return parser


def params_path(out: Path) -> Path:
    return out.with_name(out.name + '.params.json')


def run(args, config: RunConfig) -> int:
    if args.recipe == 'tumor' and not args.liver_mask:
        raise UsageError("Рецепт tumor требует --liver-mask")

    ct = read_volume(args.ct)
    if args.recipe == 'liver':
        recipe = config.liver
        result = preprocess_liver(ct, recipe)
    else:
        recipe = config.tumor
        liver_mask = read_volume(args.liver_mask, as_mask=True)
        result = preprocess_tumor(ct, liver_mask, recipe)

    out = output_path(args.out, config.output_dir, OUTPUT_DIR, f'{args.recipe}.nii.gz')
    out.parent.mkdir(parents=True, exist_ok=True)
    write_volume(result, out, datatype='float32')

    params = {
        'recipe': args.recipe,
        'order': RECIPE_ORDER[args.recipe],
        'input': str(args.ct),
        'liver_mask': str(args.liver_mask) if args.liver_mask else None,
        'output_dims': list(result.dims),
        'output_spacing': list(result.spacing),
        'parameters': recipe.model_dump(mode='json'),
    }
    with open(params_path(out), 'w', encoding='utf-8') as f:
        json.dump(params, f, indent=2, sort_keys=True)
        f.write('\n')

    logger.info(f"[SUCCESS] {args.recipe}: {ct.dims} -> {result.dims}, записано {out}")
    return EXIT_OK
