"""
Runs the command line; without arguments shows the version banner.
"""

import sys

from twinforge.cli import main, version

if len(sys.argv) > 1:
    main()
else:
    version()
