"""juliaspec — command-line entry point."""

import sys

from juliaspec.reports.cli import main

if __name__ == "__main__":
    sys.exit(main())
