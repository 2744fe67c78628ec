import sys
from gamepl.cli import main

sys.exit(main())
