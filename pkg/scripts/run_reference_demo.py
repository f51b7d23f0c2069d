import os
import sys
from pathlib import Path

ROOT_DIR = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT_DIR))

from dotenv import load_dotenv  # noqa: E402

from main import main  # noqa: E402

load_dotenv()

CONFIG = ROOT_DIR / "configs" / "reference.toml"
OUTPUT_DIR = Path(os.getenv("TOPDC_DEMO_DIR", ROOT_DIR / "results" / "reference"))


def run_demo() -> int:
    """Runs every subcommand on the bundled reference config into OUTPUT_DIR."""
    print("🚀 Starting reference demo run...")
    OUTPUT_DIR.mkdir(parents=True, exist_ok=True)
    prefix = str(OUTPUT_DIR / "reference")

    steps = [
        ("rates", ["rates", "--config", str(CONFIG), "--out", prefix, "--reconcile"]),
        ("jsi", ["jsi", "--config", str(CONFIG), "--out", prefix]),
        ("triphoton", ["triphoton", "--config", str(CONFIG), "--out", prefix]),
        ("set-scan", ["set-scan", "--config", str(CONFIG), "--out", prefix]),
        ("check", ["check"]),
    ]
    for name, argv in steps:
        print(f"Running {name}...")
        code = main(argv)
        if code != 0:
            print(f"❌ {name} failed with exit code {code}")
            return code

    print(f"✅ Demo completed. Outputs in {OUTPUT_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(run_demo())
