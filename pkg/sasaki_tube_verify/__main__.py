import sys

from sasaki_tube_verify.cli import main

if __name__ == "__main__":
    sys.exit(main())
