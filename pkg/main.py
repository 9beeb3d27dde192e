import sys

from dynmap.cli import main

# python main.py classify --model amplitude-damping --gamma 1.0 --t-max 3 --steps 256
if __name__ == "__main__":
    sys.exit(main())
