import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from config.config import APP_DESCRIPTION, APP_TITLE, APP_VERSION, CONFIG_PATH, JOBS, LOG_LEVEL, banner
from core.errors import (
    ConfigError, DropoutQCError, ManifestError, PolicyError, UsageError, VolumeFormatError,
)
from commands import EXIT_IO, EXIT_USAGE, analyze, correlate, fit_stats, flag, preprocess, synth
from uq.config import load_run_config

logger = logging.getLogger(__name__)

COMMANDS = (analyze, correlate, flag, synth, preprocess, fit_stats)


class ArgumentParser(argparse.ArgumentParser):
    """argparse завершает процесс с кодом 2; здесь ошибка разбора - это код 1"""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog='dropoutqc', description=f"{APP_TITLE} {APP_VERSION}: {APP_DESCRIPTION}")
    parser.add_argument('--config', help='JSON конфигурация запуска (по умолчанию UQ_CONFIG_PATH)')
    parser.add_argument('--log-level', default=LOG_LEVEL,
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'), help='Уровень логирования')
    subparsers = parser.add_subparsers(dest='command', required=True, parser_class=ArgumentParser)
    for command in COMMANDS:
        sub = command.add_parser(subparsers)
        # общие флаги допустимы и после имени подкоманды
        sub.add_argument('--config', default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        sub.add_argument('--log-level', default=argparse.SUPPRESS,
                         choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'), help=argparse.SUPPRESS)
    return parser


def setup_logging(level: str) -> None:
    # Настройка логирования
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        force=True,
    )


def exit_code_for(error: BaseException) -> int:
    """Сопоставление исключений с кодами возврата"""
    if isinstance(error, (UsageError, ConfigError, PolicyError, ManifestError, ValidationError)):
        return EXIT_USAGE
    if isinstance(error, (OSError, VolumeFormatError)):
        return EXIT_IO
    if isinstance(error, DropoutQCError):
        return EXIT_USAGE
    raise error


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа CLI; возвращает код возврата"""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        setup_logging(LOG_LEVEL)
        logger.error(f"[ERROR] {e}")
        return EXIT_USAGE

    setup_logging(args.log_level)
    logger.debug(banner())

    try:
        config = load_run_config(args.config or CONFIG_PATH)
        if config.jobs == 1 and JOBS != 1:
            config = config.model_copy(update={'jobs': JOBS})
        logger.info(f"[STARTUP] {APP_TITLE} {args.command}")
        return args.run(args, config)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(f"[ERROR] {args.command}: {type(e).__name__}: {e}")
        return code


if __name__ == '__main__':
    sys.exit(main())
