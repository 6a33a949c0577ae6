"""
Ранговая корреляция Спирмена мер неопределённости с качеством сегментации
"""
import logging
import math
from itertools import islice, permutations
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import betainc
from scipy.stats import rankdata

from core.errors import InsufficientDataError, UndefinedCorrelationError
from core.models import CaseReport, CorrelationResult, Measure

logger = logging.getLogger(__name__)

# Точный перебор перестановок допустим только для малых n (10! = 3 628 800)
PERMUTATION_MAX_N = 10
PERMUTATION_BATCH = 100_000
# Допуск сравнения |rho| при переборе: значения рационального вида a/b
PERMUTATION_TOLERANCE = 1e-12

QUALITY_COLUMN = "dice"
GROUP_FIELDS = ("split", "group")


def _is_missing(value) -> bool:
    if value is None:
        return True
    try:
        return math.isnan(value)
    except TypeError:
        return False


def drop_incomplete_pairs(x: Sequence, y: Sequence) -> Tuple[np.ndarray, np.ndarray, int]:
    """Попарное удаление: пары, где хотя бы одно значение не определено"""
    if len(x) != len(y):
        raise InsufficientDataError(f"Длины выборок различаются: {len(x)} и {len(y)}")
    kept = [(a, b) for a, b in zip(x, y) if not _is_missing(a) and not _is_missing(b)]
    dropped = len(x) - len(kept)
    xs = np.array([a for a, _ in kept], dtype=np.float64)
    ys = np.array([b for _, b in kept], dtype=np.float64)
    return xs, ys, dropped


def _centered_ranks(values: np.ndarray) -> np.ndarray:
    # сумма средних рангов всегда n(n+1)/2, поэтому центр задаётся точно
    n = len(values)
    return rankdata(values, method="average") - (n + 1) / 2.0


def _rank_correlation(dx: np.ndarray, dy: np.ndarray) -> float:
    sxx = float(np.dot(dx, dx))
    syy = float(np.dot(dy, dy))
    if sxx == 0.0 or syy == 0.0:
        raise UndefinedCorrelationError("Нулевая дисперсия рангов: все значения одной из выборок равны")
    rho = float(np.dot(dx, dy)) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, rho))


def t_p_value(rho: float, n: int) -> float:
    """
    Двусторонний p-value по t-аппроксимации с n-2 степенями свободы.

    t = rho·sqrt((n-2)/(1-rho²)); P(|T| >= |t|) = I_{df/(df+t²)}(df/2, 1/2).
    При |rho| = 1 возвращается 0.
    """
    df = n - 2
    if abs(rho) >= 1.0:
        return 0.0
    t_sq = rho * rho * df / (1.0 - rho * rho)
    return float(min(1.0, betainc(df / 2.0, 0.5, df / (df + t_sq))))


def permutation_p_value(dx: np.ndarray, dy: np.ndarray, rho: float) -> float:
    """
    Точный двусторонний p-value перебором всех перестановок рангов y.

    Доля перестановок с |rho_perm| >= |rho|.
    """
    n = len(dx)
    if n > PERMUTATION_MAX_N:
        raise InsufficientDataError(f"Перебор перестановок поддерживается для n <= {PERMUTATION_MAX_N}, n={n}")
    norm = math.sqrt(float(np.dot(dx, dx)) * float(np.dot(dy, dy)))
    target = abs(rho) - PERMUTATION_TOLERANCE

    total = 0
    extreme = 0
    perms = permutations(dy)
    while True:
        batch = np.array(list(islice(perms, PERMUTATION_BATCH)), dtype=np.float64)
        if batch.size == 0:
            break
        rhos = batch @ dx / norm
        extreme += int(np.count_nonzero(np.abs(rhos) >= target))
        total += len(batch)
    return extreme / total


def spearman(x: Sequence[Optional[float]], y: Sequence[Optional[float]], method: str = "t",
             measure: str = "x", quality: str = QUALITY_COLUMN) -> CorrelationResult:
    """
    Корреляция Спирмена со средними рангами для связей.

    Args:
        x, y: Выборки одинаковой длины; пары с None/NaN отбрасываются
        method: 't' (t-аппроксимация) или 'permutation' (точный перебор, n <= 10)
        measure, quality: Имена колонок для результата

    Returns:
        CorrelationResult
    """
    xs, ys, dropped = drop_incomplete_pairs(x, y)
    n = len(xs)
    if n < 3:
        raise InsufficientDataError(f"Для корреляции нужно >= 3 полных пар, получено {n} (отброшено {dropped})")

    dx = _centered_ranks(xs)
    dy = _centered_ranks(ys)
    rho = _rank_correlation(dx, dy)

    if method == "permutation":
        if n <= PERMUTATION_MAX_N:
            p_value = permutation_p_value(dx, dy, rho)
        else:
            logger.warning(f"[WARN] n={n} > {PERMUTATION_MAX_N}: перебор недоступен, используется t-аппроксимация")
            method = "t"
            p_value = t_p_value(rho, n)
    elif method == "t":
        p_value = t_p_value(rho, n)
    else:
        raise ValueError(f"Неизвестный метод p-value: {method}")

    return CorrelationResult(measure=measure, quality=quality, rho=rho, p_value=p_value,
                             n=n, dropped=dropped, method=method)


def _table_block(reports: Sequence[CaseReport], method: str, group: Optional[str] = None) -> List[CorrelationResult]:
    quality = [r.dice for r in reports]
    if all(q is None for q in quality):
        raise InsufficientDataError("В отчётах нет значений dice: корреляция с качеством невозможна")

    defined = [q for q in quality if q is not None]
    mean_quality = float(np.mean(defined)) if group is not None else None

    rows = []
    for measure in Measure:
        values = [r.measure(measure) for r in reports]
        result = spearman(values, quality, method=method, measure=measure.value)
        if group is not None:
            result = result.model_copy(update={"group": group, "mean_quality": mean_quality})
        if result.dropped:
            logger.info(f"{measure.value}: отброшено {result.dropped} случаев с неопределёнными значениями")
        rows.append(result)
    return rows


def correlation_table(reports: Sequence[CaseReport], group_by: Optional[str] = None,
                      method: str = "t") -> List[CorrelationResult]:
    """
    Таблица корреляций мер (cv, d_pw, u_labelled) с dice.

    Args:
        reports: Отчёты по случаям
        group_by: None, 'split' или 'group' - по блоку на каждую метку
        method: Метод p-value

    Returns:
        Строки таблицы; при группировке блоки идут в порядке меток
    """
    if group_by is None:
        return _table_block(reports, method)

    if group_by not in GROUP_FIELDS:
        raise ValueError(f"group_by должен быть одним из {GROUP_FIELDS}, получено '{group_by}'")

    blocks: Dict[str, List[CaseReport]] = {}
    unlabelled = 0
    for report in reports:
        label = getattr(report, group_by)
        if label is None:
            unlabelled += 1
            continue
        blocks.setdefault(label, []).append(report)
    if unlabelled:
        logger.warning(f"[WARN] {unlabelled} отчётов без метки '{group_by}' исключены из сгруппированной таблицы")
    if not blocks:
        raise InsufficientDataError(f"Ни у одного отчёта нет метки '{group_by}'")

    rows: List[CorrelationResult] = []
    for label in sorted(blocks):
        try:
            rows.extend(_table_block(blocks[label], method, group=label))
        except (InsufficientDataError, UndefinedCorrelationError) as e:
            logger.warning(f"[WARN] Блок '{label}' пропущен: {e}")
    if not rows:
        raise InsufficientDataError(f"Ни один блок по '{group_by}' не содержит достаточно данных")
    return rows
