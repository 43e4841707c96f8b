import sys

from overlapkit.core.app import main

if __name__ == "__main__":
    sys.exit(main())
