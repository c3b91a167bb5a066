import sys

from qkd_rotsym.cli import main

sys.exit(main())
