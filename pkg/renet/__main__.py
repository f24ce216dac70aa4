import sys

from renet.cli import main

sys.exit(main())
