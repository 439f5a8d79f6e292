import re
from pathlib import Path


class FileHandler:
    """Handles the output directory layout of speclink runs."""

    SUBDIRS = ("trajectories", "matrices", "logs")

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)

    def ensure_layout(self) -> None:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        for name in self.SUBDIRS:
            (self.output_dir / name).mkdir(exist_ok=True)

    def sanitize_filename(self, filename: str) -> str:
        """Sanitize filename to remove problematic characters."""
        return re.sub(r'[^\w\-_\.]', '_', filename)

    def resolve(self, path: str | Path) -> Path:
        """Relative paths are taken inside the output directory."""
        path = Path(path)
        return path if path.is_absolute() else self.output_dir / path

    def trajectory_path(self, pde_name: str, seed: int | None = None, member: int | None = None) -> Path:
        stem = f"trajectory_{self.sanitize_filename(pde_name)}"
        if seed is not None:
            stem += f"_seed{seed}"
        if member is not None:
            stem += f"_m{member}"
        return self.output_dir / "trajectories" / f"{stem}.json"

    def matrix_path(self, label: str, provenance: str) -> Path:
        prefix = "kstar" if provenance == "equation_driven" else "khat"
        return self.output_dir / "matrices" / f"{prefix}_{self.sanitize_filename(label)}.json"
