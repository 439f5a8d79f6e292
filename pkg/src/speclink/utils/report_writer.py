import logging
from pathlib import Path
from typing import Dict, Optional

from speclink.model_utils import dumps
from speclink.report_schema import ConfusionMatrix, ExperimentResult

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.9g"


class ReportWriter:
    """Writes confusion-experiment artifacts: CSV tables, JSON detail, markdown summary."""

    def __init__(self, report_dir: Path):
        self.report_dir = Path(report_dir)

    def write_confusion_csv(self, matrix: ConfusionMatrix, filename: str) -> Path:
        path = self.report_dir / filename
        path.parent.mkdir(parents=True, exist_ok=True)
        matrix.to_frame().to_csv(path, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        return path

    def write_detail(self, result: ExperimentResult, reference: Optional[ExperimentResult] = None) -> Path:
        payload = result.model_dump(mode="json", by_alias=True, exclude_none=True)
        payload["dominance"] = result.dominance()
        if reference is not None:
            payload["gaussian_reference"] = {
                "distance": reference.distance.model_dump(mode="json"),
                "similarity": reference.similarity.model_dump(mode="json"),
                "frobenius": reference.frobenius.model_dump(mode="json"),
                "dominance": reference.dominance(),
            }
        path = self.report_dir / "detail.json"
        path.write_text(dumps(payload), encoding="utf-8")
        return path

    def write_summary(self, result: ExperimentResult, reference: Optional[ExperimentResult] = None) -> Path:
        text = result.to_markdown()
        if reference is not None:
            text += "\n\n" + reference.to_markdown(title="Single Gaussian initial condition")
        path = self.report_dir / "summary.md"
        path.write_text(text + "\n", encoding="utf-8")
        return path

    def write_all(self, result: ExperimentResult, reference: Optional[ExperimentResult] = None) -> Dict[str, Path]:
        self.report_dir.mkdir(parents=True, exist_ok=True)
        paths = {
            "confusion_d": self.write_confusion_csv(result.distance, "confusion_d.csv"),
            "confusion_s": self.write_confusion_csv(result.similarity, "confusion_s.csv"),
            "confusion_frobenius": self.write_confusion_csv(result.frobenius, "confusion_frobenius.csv"),
            "detail": self.write_detail(result, reference),
            "summary": self.write_summary(result, reference),
        }
        logger.info(f"Confusion reports written to {self.report_dir}")
        return paths
