"""Print the measured critical vertex angle next to the closed-form θ_max.

    python scripts/detachment_table.py [gamma] [mach ...]
"""

import os
import sys

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from wedgeflow.jobs import detachment_rows  # noqa: E402

DEFAULT_MACHS = (1.2, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0, 8.0)


def main(argv) -> int:
    gamma = float(argv[0]) if argv else 1.4
    machs = [float(m) for m in argv[1:]] or list(DEFAULT_MACHS)
    print(f"{'M':>6} {'gamma':>6} {'omega_crit':>12} {'theta_max':>12} {'gap':>10}")
    for mach, g, measured, closed in detachment_rows(machs, gamma):
        print(f"{mach:6.2f} {g:6.3f} {measured:12.5f} {closed:12.5f} {measured - closed:10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
