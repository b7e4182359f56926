# schemas/diagram.py

from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field, model_validator

from schemas.catalog import MissionSpec
from schemas.lqg import LqgBlockSpec


class GridSpec(BaseModel):
    """Explicit values, or `points` linear/log-spaced values on [lo, hi]."""
    values: Optional[List[float]] = None
    scale: Literal["linear", "log"] = "linear"
    lo: Optional[float] = None
    hi: Optional[float] = None
    points: Optional[int] = Field(None, ge=1)

    @model_validator(mode="after")
    def one_form(self):
        ranged = self.lo is not None and self.hi is not None and self.points is not None
        if (self.values is None) == (not ranged):
            raise ValueError("give either values or lo/hi/points")
        if ranged and self.hi < self.lo:
            raise ValueError("hi must not be below lo")
        if ranged and self.scale == "log" and self.lo <= 0:
            raise ValueError("log grids need lo > 0")
        return self


class TableRow(BaseModel):
    """One implementation of an inline table node."""
    name: str
    prov: List[float]
    req: List[float]


class PortSpec(BaseModel):
    """A real-valued port."""
    name: str
    unit: str = ""


class NodeSpec(BaseModel):
    """A diagram node: a catalog block, a summing junction, an inline table, an LQG block or the mission."""
    kind: str
    catalog: Optional[str] = None
    role: Optional[str] = None
    addends: Optional[List[str]] = None
    total: str = "total"
    scale: float = Field(1.0, gt=0)
    unit: str = ""
    total_unit: Optional[str] = None
    fun: Optional[List[PortSpec]] = None
    res: Optional[List[PortSpec]] = None
    rows: Optional[List[TableRow]] = None
    lqg: Optional[LqgBlockSpec] = None
    mission: Optional[MissionSpec] = None
    grids: Dict[str, GridSpec] = {}


class LqgGrids(BaseModel):
    """Design grids for the drone controller; the plant comes from the mission."""
    alpha_grid: Optional[List[float]] = None
    v_grid: Optional[List[float]] = None
    w_grid: Optional[List[float]] = None
    frequency_grid: Optional[List[float]] = None
    cross_term: bool = False


class EdgeSpec(BaseModel):
    """`provider.functionality_port -> consumer.resource_port`."""
    edge: str
    loop: bool = False


class DiagramFile(BaseModel):
    """A co-design diagram: either explicit nodes and edges, or the drone template."""
    name: str = "diagram"
    template: Optional[Literal["drone"]] = None

    # explicit diagrams
    nodes: Dict[str, NodeSpec] = {}
    edges: List[Union[str, EdgeSpec]] = []
    exposed_fun: List[str] = []
    exposed_res: List[str] = []

    # drone template
    catalogs: Dict[str, str] = {}
    mission: Optional[MissionSpec] = None
    lqg: Optional[LqgGrids] = None
    grids: Dict[str, GridSpec] = {}

    @model_validator(mode="after")
    def one_form(self):
        if self.template is None and not self.nodes:
            raise ValueError("a diagram without a template needs nodes")
        if self.template == "drone" and self.nodes:
            raise ValueError("the drone template builds its own nodes; remove 'nodes'")
        return self

    def edge_specs(self) -> List[EdgeSpec]:
        return [EdgeSpec(edge=e) if isinstance(e, str) else e for e in self.edges]


QueryKind = Literal["fix_fun_min_res", "fix_res_max_fun"]


class QueryFile(BaseModel):
    """A query against one diagram file.

    `fix_fun_min_res` solves each point of `sweep` (exposed functionalities).
    `fix_res_max_fun` treats each point of `sweep` as a resource budget and
    maximizes over `candidates` (exposed functionalities). `bounds` caps
    exposed resources by `node.port` name.
    """
    diagram: str
    kind: QueryKind = "fix_fun_min_res"
    sweep: List[List[float]]
    candidates: List[List[float]] = []
    bounds: Dict[str, float] = {}
    format: Literal["csv", "json"] = "csv"

    @model_validator(mode="after")
    def candidates_for_dual(self):
        if self.kind == "fix_res_max_fun" and not self.candidates:
            raise ValueError("fix_res_max_fun queries need candidate functionalities")
        return self
