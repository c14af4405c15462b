import sys

from protkin.benchcli.main import main

if __name__ == "__main__":
    sys.exit(main())
