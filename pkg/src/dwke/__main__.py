import sys

from dwke.cli import main

sys.exit(main())
