"""
DropoutQC error hierarchy
Типизированные ошибки домена; CLI сопоставляет их с кодами возврата
"""


class DropoutQCError(Exception):
    """Базовая ошибка пакета"""


# --- Геометрия и инварианты объёмов ---

class VolumeError(DropoutQCError, ValueError):
    """Нарушен инвариант VoxelGrid / BinaryMask / SampleSet"""


class DimensionMismatchError(VolumeError):
    """Размерности объёмов не совпадают"""


class EmptyMaskError(VolumeError):
    """Маска не содержит ни одного вокселя переднего плана"""


# --- Форматы файлов ---

class VolumeFormatError(DropoutQCError, ValueError):
    """Файл объёма не может быть прочитан или записан"""


class BadMagicError(VolumeFormatError):
    """Неверная сигнатура NIfTI-1"""


class TruncatedPayloadError(VolumeFormatError):
    """Длина данных меньше nx·ny·nz·bytes"""


class UnsupportedDatatypeError(VolumeFormatError):
    """Тип данных вне набора uint8 / int16 / float32"""


class UnsupportedFormatError(VolumeFormatError):
    """NIfTI-2, пары .hdr/.img и прочие неподдерживаемые варианты"""


class RangeOverflowError(VolumeFormatError):
    """Значения не представимы в запрошенном целочисленном типе"""


# --- Входные описания ---

class ManifestError(DropoutQCError, ValueError):
    """Некорректный манифест когорты"""


class ConfigError(DropoutQCError, ValueError):
    """Некорректный конфигурационный файл"""


class PolicyError(DropoutQCError, ValueError):
    """Некорректная политика флагирования"""


class PhantomError(DropoutQCError, ValueError):
    """Фантом не помещается в сетку"""


# --- Статистика и отчёты ---

class InsufficientDataError(DropoutQCError, ValueError):
    """Слишком мало пригодных наблюдений"""


class UndefinedCorrelationError(DropoutQCError, ValueError):
    """Нулевая дисперсия рангов: корреляция не определена"""


class ReportFormatError(DropoutQCError, ValueError):
    """CSV отчёта не соответствует документированной схеме"""


class UsageError(DropoutQCError, ValueError):
    """Некорректные аргументы командной строки"""
