import sys

from fblsc import run

sys.exit(run(sys.argv[1:]))
