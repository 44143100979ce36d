"""Launcher: python app.py <command> [options]"""

import sys

from specflow.main import main

if __name__ == "__main__":
    sys.exit(main())
