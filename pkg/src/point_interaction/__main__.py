import sys

from point_interaction.cli import main

sys.exit(main())
