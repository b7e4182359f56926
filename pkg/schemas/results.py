# schemas/results.py

from typing import Dict, List, Optional

from pydantic import BaseModel


class FrontRow(BaseModel):
    """One antichain point of a query answer; empty `res` marks an infeasible sweep point."""
    fun: Dict[str, float]
    res: Dict[str, Optional[float]]
    witness: Dict[str, str] = {}

    def flat(self, fun_names: List[str], res_names: List[str], witness_names: List[str]) -> Dict[str, object]:
        row: Dict[str, object] = {}
        for name in fun_names:
            row[f"fun_{name}"] = self.fun.get(name)
        for name in res_names:
            row[f"res_{name}"] = self.res.get(name)
        for name in witness_names:
            row[f"witness_{name}"] = self.witness.get(name, "")
        return row


class SweepRow(BaseModel):
    """Performance of the optimal LQG controller at one (alpha, v, w) point."""
    alpha: float
    v: float
    w: float
    P_track: float
    P_effort: float
    closed_form_P_track: Optional[float] = None
    closed_form_P_effort: Optional[float] = None


class ValidationReport(BaseModel):
    """Outcome of schema-checking one file."""
    path: str
    kind: str
    ok: bool
    message: str = ""
