"""
Скрипт для генерации синтетической когорты по умолчанию (55 случаев, 64³).
Запустите: python generate_cohort.py [каталог]
"""

import sys
from pathlib import Path

# Добавляем src и корень в путь
sys.path.insert(0, str(Path(__file__).parent / "src"))
sys.path.insert(0, str(Path(__file__).parent))

from cli import main

if __name__ == "__main__":
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "output/cohort"

    print("\n" + "="*80)
    print("ГЕНЕРАЦИЯ СИНТЕТИЧЕСКОЙ КОГОРТЫ MC-DROPOUT СЭМПЛОВ")
    print("="*80 + "\n")

    code = main(["synth", "--out", out_dir, "--splits"])
    if code != 0:
        print(f"\n[ERROR] ОШИБКА: synth завершился с кодом {code}")
        sys.exit(code)

    print("\n" + "="*80)
    print("[SUCCESS] УСПЕШНО! Когорта сгенерирована.")
    print("="*80)
    print("\nТеперь вы можете:")
    print(f"  1. Посчитать меры: python main.py analyze --manifest {out_dir}/manifest.json --out output/reports.csv")
    print("  2. Корреляции с dice: python main.py correlate --reports output/reports.csv --out output/correlation.csv")
    print("  3. Отметить случаи: python main.py flag --reports output/reports.csv --policy policy.json")
