from typing import Dict, List, Literal, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator

from speclink.operators import display_label
from speclink.schemas import ExperimentConfig, RealMatrix

Metric = Literal["d", "s", "frobenius"]

METRIC_TITLES = {
    "d": "Koopman matrix distance d (lower is better)",
    "s": "Koopman matrix similarity s (higher is better)",
    "frobenius": "Frobenius discrepancy ||K_hat - K*||_F (lower is better)",
}


class LinkScore(BaseModel):
    d: float = Field(ge=0.0, description="Mean minimal distance between scaled eigenvectors")
    s: float = Field(ge=0.0, le=1.0, description="Mean maximal normalised inner product")
    d_matches: List[int] = Field(description="argmin_j for every star eigenpair i")
    s_matches: List[int] = Field(description="argmax_j for every star eigenpair i (-1 when none is usable)")


class CandidateVerdict(BaseModel):
    name: str
    d: float
    s: float
    frobenius: float
    d_matches: Optional[List[int]] = None
    s_matches: Optional[List[int]] = None


class IdentificationResult(BaseModel):
    verdicts: List[CandidateVerdict]
    ranking_d: List[str] = Field(description="Candidates by ascending d")
    ranking_s: List[str] = Field(description="Candidates by descending s")
    ranking_frobenius: List[str] = Field(description="Candidates by ascending Frobenius discrepancy")
    winner: str = Field(description="Headline verdict: the s-ranking winner")
    rankings_agree: bool

    @classmethod
    def from_verdicts(cls, verdicts: List[CandidateVerdict]) -> "IdentificationResult":
        ranking_d = [v.name for v in sorted(verdicts, key=lambda v: v.d)]
        ranking_s = [v.name for v in sorted(verdicts, key=lambda v: -v.s)]
        ranking_frobenius = [v.name for v in sorted(verdicts, key=lambda v: v.frobenius)]
        agree = ranking_d[0] == ranking_s[0] == ranking_frobenius[0]
        return cls(
            verdicts=verdicts,
            ranking_d=ranking_d,
            ranking_s=ranking_s,
            ranking_frobenius=ranking_frobenius,
            winner=ranking_s[0],
            rankings_agree=agree,
        )


class ConfusionMatrix(BaseModel):
    """Metric table; rows are candidate PDEs, columns are the PDEs that generated the data."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    candidate_names: List[str]
    true_names: List[str]
    values: RealMatrix
    metric: Metric

    @model_validator(mode="after")
    def _check_labels(self) -> "ConfusionMatrix":
        if self.values.shape != (len(self.candidate_names), len(self.true_names)):
            raise ValueError(
                f"values {self.values.shape} do not match "
                f"{len(self.candidate_names)} candidates x {len(self.true_names)} truths"
            )
        if len(set(self.candidate_names)) != len(self.candidate_names) or len(set(self.true_names)) != len(
            self.true_names
        ):
            raise ValueError("candidate and true names must be unique")
        return self

    @property
    def higher_is_better(self) -> bool:
        return self.metric == "s"

    def value(self, candidate: str, true: str) -> float:
        return float(self.values[self.candidate_names.index(candidate), self.true_names.index(true)])

    def best_candidate(self, true: str) -> str:
        column = self.values[:, self.true_names.index(true)]
        row = int(np.argmax(column) if self.higher_is_better else np.argmin(column))
        return self.candidate_names[row]

    def diagonal_dominance(self) -> Dict[str, bool]:
        """Per true PDE: whether its own candidate attains the column optimum."""
        return {true: self.best_candidate(true) == true for true in self.true_names}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, index=self.candidate_names, columns=self.true_names)
        frame.index.name = "candidate\\true"
        return frame


class CellDetail(BaseModel):
    true_name: str
    candidate_name: str
    seed: int
    d: float
    s: float
    frobenius: float
    data_rank: int
    hat_max_residual: float
    star_max_residual: float


class ExperimentResult(BaseModel):
    config: ExperimentConfig
    distance: ConfusionMatrix
    similarity: ConfusionMatrix
    frobenius: ConfusionMatrix
    identification: Dict[str, IdentificationResult]
    details: List[CellDetail]

    def dominance(self) -> Dict[str, Dict[str, bool]]:
        return {
            "d": self.distance.diagonal_dominance(),
            "s": self.similarity.diagonal_dominance(),
            "frobenius": self.frobenius.diagonal_dominance(),
        }

    def to_markdown(self, title: str = "Numerical Spectrum Linking") -> str:
        """Render the confusion tables and verdicts as a markdown summary."""
        cfg = self.config
        ic = cfg.initial_condition
        md = [f"# {title}"]
        md.append("\n## Setup")
        md.append(f"- **Resolution:** {' x '.join(str(m) for m in cfg.basis.sizes)}")
        md.append(f"- **Time step:** {cfg.dt:g}, **horizon:** {cfg.horizon:g}")
        md.append(f"- **Physics:** c_x={cfg.physics.c_x:g}, c_y={cfg.physics.c_y:g}, nu={cfg.physics.nu:g}")
        md.append(f"- **Initial conditions:** {ic.kind}, seeds {ic.seeds}, ensemble size {ic.ensemble_size}")
        md.append(f"- **Spectral separation:** {cfg.spectral_separation:g}")

        for matrix in (self.distance, self.similarity, self.frobenius):
            md.append(f"\n## {METRIC_TITLES[matrix.metric]}")
            md.append("| Candidate\\True | " + " | ".join(display_label(t) for t in matrix.true_names) + " |")
            md.append("|---" * (len(matrix.true_names) + 1) + "|")
            for i, candidate in enumerate(matrix.candidate_names):
                cells = []
                for j, true in enumerate(matrix.true_names):
                    text = f"{matrix.values[i, j]:.5f}"
                    cells.append(f"**{text}**" if matrix.best_candidate(true) == candidate else text)
                md.append(f"| {display_label(candidate)} | " + " | ".join(cells) + " |")
            held = matrix.diagonal_dominance()
            md.append(f"\nDiagonal dominance: {sum(held.values())}/{len(held)} columns")
            for true, ok in held.items():
                if not ok:
                    best = display_label(matrix.best_candidate(true))
                    md.append(f"- {display_label(true)}: best candidate is {best}")

        md.append("\n## Verdicts")
        for true, ident in self.identification.items():
            flag = "" if ident.rankings_agree else " (rankings disagree)"
            md.append(f"- **{display_label(true)}:** identified as {display_label(ident.winner)}{flag}")
        return "\n".join(md)
