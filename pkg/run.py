"""
KernelTestLab - Run Script
Convenience script that sets up the Python path and runs the CLI
"""

import sys
from pathlib import Path

# Add project root to Python path
project_root = Path(__file__).parent
sys.path.insert(0, str(project_root))

# Load environment
from dotenv import load_dotenv  # noqa: E402
load_dotenv(project_root / '.env')

if __name__ == '__main__':
    from src.cli.bench_cli import main

    sys.exit(main())
