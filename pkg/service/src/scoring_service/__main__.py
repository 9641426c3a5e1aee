"""Allow ``python3 -m scoring_service``."""

import sys

from .cli import main

sys.exit(main())
