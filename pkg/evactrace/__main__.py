import sys

from evactrace.cli import main

sys.exit(main())
