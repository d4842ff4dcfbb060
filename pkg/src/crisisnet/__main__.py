import sys

from crisisnet.cli import main

sys.exit(main())
