"""Entry point for running the giant-atom BIC toolkit from a checkout."""

import sys

from src.cli import main

if __name__ == "__main__":
    sys.exit(main())
