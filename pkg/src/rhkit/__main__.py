import sys

from rhkit.cli import main

sys.exit(main())
