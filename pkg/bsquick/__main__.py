import sys

from bsquick.harness.cli import main

sys.exit(main())
