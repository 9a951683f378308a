import sys

from juliaspec.reports.cli import main

sys.exit(main())
