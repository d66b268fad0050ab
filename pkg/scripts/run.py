# ./scripts/run.py
import sys

from panova.cli import main

if __name__ == "__main__":
    sys.exit(main())
