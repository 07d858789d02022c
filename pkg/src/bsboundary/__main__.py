import sys

from bsboundary.cli import main

sys.exit(main())
