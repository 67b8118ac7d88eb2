# setup.py
"""
Minmax FEM Two-Center Dirac Solver - Workspace Setup Script
Creates the run and export directories and a default .env, then checks the numerical stack.
"""

import importlib
import shutil
import sys
from pathlib import Path

REQUIRED_MODULES = ["numpy", "scipy", "mpmath", "pandas", "openpyxl", "fpdf", "dotenv"]


class SolverSetup:
    def __init__(self, base_dir=None):
        self.base_dir = Path(base_dir) if base_dir else Path.cwd()
        self.required_dirs = ["runs", "exports"]

    def print_step(self, step_num, message):
        """Print formatted step message"""
        print(f"\n{'='*50}")
        print(f"STEP {step_num}: {message}")
        print(f"{'='*50}")

    def create_directories(self):
        self.print_step(1, "Creating Directory Structure")

        for dir_path in self.required_dirs:
            full_path = self.base_dir / dir_path
            full_path.mkdir(parents=True, exist_ok=True)
            print(f"✓ Created directory: {full_path}")

    def create_env_file(self):
        """Copy .env.example to .env unless one exists"""
        self.print_step(2, "Creating Environment Configuration")

        env_path = self.base_dir / ".env"
        example = self.base_dir / ".env.example"
        if env_path.exists():
            print("✓ .env file already exists")
            return False
        if example.exists():
            shutil.copyfile(example, env_path)
        else:
            env_path.write_text("ENVIRONMENT=development\nLOG_LEVEL=INFO\n", encoding="utf-8")
        print("✓ Created .env file")
        return True

    def check_dependencies(self):
        """Names of the required modules that fail to import"""
        self.print_step(3, "Checking Numerical Stack")

        missing = []
        for name in REQUIRED_MODULES:
            try:
                importlib.import_module(name)
                print(f"✓ {name}")
            except ImportError:
                missing.append(name)
                print(f"✗ Missing: {name}")
        return missing

    def run_setup(self):
        print("Minmax FEM Two-Center Dirac Solver - Setup")
        self.create_directories()
        self.create_env_file()
        missing = self.check_dependencies()

        self.print_step(4, "Setup Complete!")
        if missing:
            print("Install the missing packages with: pip install -r requirements.txt")
            return 1
        print("Run a ladder with: python cli.py ladder --config configs/h2plus.cfg")
        return 0


def main():
    return SolverSetup().run_setup()


if __name__ == "__main__":
    sys.exit(main())
