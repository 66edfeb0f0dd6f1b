"""Generator specification schemas."""
from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from schemas.instances import FractionalPoint, PackingInstance


class Family(str, Enum):
    """Instance families the generators can build."""
    K_SPARSE_EXACT = "k-sparse-exact"
    K_SPARSE_BERNOULLI = "k-sparse-bernoulli"
    HYPERGRAPH_BMATCH = "hypergraph-bmatch"
    BUTTERFLY = "butterfly"


class GeneratorSpec(BaseModel):
    """Family tag plus parameters; identical specs give identical instances."""
    model_config = ConfigDict(frozen=True, use_enum_values=True)

    family: Family
    m: Optional[int] = Field(None, ge=1, description="Rows (hyperedges for b-matching)")
    n: Optional[int] = Field(None, ge=1, description="Variables (vertices for b-matching)")
    k: Optional[int] = Field(None, ge=1, description="Row cardinality / hyperedge size")
    b: Optional[int] = Field(None, ge=1, description="b-matching capacity")
    prob: Optional[float] = Field(None, gt=0, lt=1, description="Bernoulli entry probability (defaults to k/n)")
    inputs: Optional[int] = Field(None, ge=2, description="Butterfly input count, a power of 2")
    certify: bool = Field(False, description="Scale the b-matching point to certified feasibility")
    seed: int = Field(0, ge=0, lt=2 ** 64)

    @model_validator(mode="after")
    def _check_parameters(self) -> "GeneratorSpec":
        family = Family(self.family)
        required = {
            Family.K_SPARSE_EXACT: ("m", "n", "k"),
            Family.K_SPARSE_BERNOULLI: ("m", "n"),
            Family.HYPERGRAPH_BMATCH: ("m", "n", "k", "b"),
            Family.BUTTERFLY: ("inputs",),
        }[family]
        missing = [name for name in required if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{family.value} needs parameters: {', '.join(missing)}")
        if family == Family.K_SPARSE_BERNOULLI and self.prob is None and self.k is None:
            raise ValueError("k-sparse-bernoulli needs prob or k")
        if self.k is not None and self.n is not None and self.k > self.n:
            raise ValueError(f"k={self.k} exceeds n={self.n}")
        if family == Family.BUTTERFLY and self.inputs & (self.inputs - 1):
            raise ValueError(f"butterfly inputs must be a power of 2, got {self.inputs}")
        return self


class GeneratedInstance(BaseModel):
    """An instance with the fractional point its generator returned, if any."""
    spec: GeneratorSpec
    instance: PackingInstance
    point: Optional[FractionalPoint] = None
    dropped_rows: int = 0
    rng: str


class ButterflyRouting(BaseModel):
    """Two-phase routing of source-destination pairs on an L-level butterfly.

    Node (level, row) with level in [0, L] and row in [0, 2^L). Edge id
    `level * 2N + 2 * row + kind` joins (level, row) to
    (level + 1, row ^ (kind << level)); kind 0 is straight, 1 is cross.
    """
    num_inputs: int
    levels: int
    sources: list[int]
    destinations: list[int]
    intermediates: list[int]
    paths: list[list[int]]  # ordered edge trail per pair

    @property
    def num_edges(self) -> int:
        return 2 * self.num_inputs * self.levels

    def edge_endpoints(self, edge: int) -> tuple[tuple[int, int], tuple[int, int]]:
        level, rest = divmod(edge, 2 * self.num_inputs)
        row, kind = divmod(rest, 2)
        return (level, row), (level + 1, row ^ (kind << level))
