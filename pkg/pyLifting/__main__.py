import sys

from pyLifting.cli import main

sys.exit(main())
