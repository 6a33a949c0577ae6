"""
Модуль оценки неопределённости MC-dropout сегментаций.
Предобработка КТ, агрегация сэмплов, корреляционный анализ и синтетические когорты.
"""

__version__ = "1.0.0"
