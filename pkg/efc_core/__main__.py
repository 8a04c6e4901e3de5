import sys

from efc_core.app.main import main

if __name__ == "__main__":
    sys.exit(main())
