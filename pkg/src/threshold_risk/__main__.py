"""``python -m threshold_risk`` エントリポイント。"""

from __future__ import annotations

import sys

from threshold_risk.cli import main

if __name__ == "__main__":
    sys.exit(main())
