import sys

from .cli_runner.main import main

sys.exit(main())
