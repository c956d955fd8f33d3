import sys

from retail_mas.cli import main

sys.exit(main())
