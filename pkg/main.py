"""
DropoutQC - Main Entry Point
Запуск командной строки из корневой директории
"""

import sys
import os

# Добавляем папку src в Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

# Импортируем и запускаем CLI
if __name__ == "__main__":
    from cli import main

    sys.exit(main())
