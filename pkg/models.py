from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List, Optional, Dict, Any
from enum import Enum


class CommandKind(str, Enum):
    RESIDUE = "residue"
    RESIDUE_REL = "residue-rel"
    TRACE = "trace"
    TATE_LAMBDA = "tate-lambda"
    KLT = "klt"
    GROEBNER = "groebner"
    QUOTIENT = "quotient"
    FRACTION = "fraction"
    CECH = "cech"
    VERIFY = "verify"


class RuleId(str, Enum):
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"
    R4 = "R4"
    R5 = "R5"
    R6 = "R6"
    R7 = "R7"
    R8 = "R8"
    R9 = "R9"
    R10 = "R10"
    JACOBIAN = "jacobian"
    TATE = "tate"
    PAIRING = "pairing"
    SUM = "sum"
    CECH = "cech"
    ORACLE = "oracle"
    INDEPENDENCE = "independence"
    ALTERNATION = "alternation"
    KUNZ = "kunz"
    BASECHANGE = "basechange"
    DECOMPOSITION = "decomposition"


class TrialStatus(str, Enum):
    PASSED = "passed"
    FAILED = "failed"
    SKIPPED = "skipped"


class RingDeclaration(BaseModel):
    model_config = ConfigDict(extra="forbid")

    field: str = "QQ"
    base: List[str] = []
    fiber: List[str] = []


class Query(BaseModel):
    model_config = ConfigDict(extra="forbid")

    cmd: CommandKind
    form: Optional[str] = None
    denoms: List[str] = []
    element: Optional[str] = None
    exponents: Optional[List[int]] = None
    gamma: Optional[List[int]] = None  # rescale target
    other_form: Optional[str] = None  # second operand of fraction equality
    other_denoms: Optional[List[str]] = None
    other_exponents: Optional[List[int]] = None
    action: Optional[str] = None
    order: Optional[str] = None
    r: Optional[int] = None
    twist: Optional[int] = None
    q: Optional[int] = None
    alpha: Optional[List[int]] = None
    rule: Optional[RuleId] = None
    trials: Optional[int] = Field(default=None, ge=0)
    seed: Optional[int] = Field(default=None, ge=0)
    n: Optional[int] = None
    m: Optional[int] = None
    degree: Optional[int] = None


class JobFile(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ring: RingDeclaration = RingDeclaration()
    queries: List[Query] = []


class OutputRecord(BaseModel):
    query: Dict[str, Any]
    status: str  # "ok" or "error"
    code: Optional[str] = None
    message: Optional[str] = None
    value: Any = None
    text: Optional[str] = Field(default=None, exclude=True)  # parser-readable rendering of value
    timing: float = Field(default=0.0, exclude=True)  # seconds; kept off the wire


class InstanceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n: int = Field(default=2, ge=1, le=3)  # fiber variables
    m: int = Field(default=1, ge=0, le=2)  # base variables
    degree: int = Field(default=3, ge=2, le=4)
    field: str = "QQ"
    seed: int = Field(default=0, ge=0)


class FailureRecord(BaseModel):
    trial: int
    instance: Dict[str, Any]
    lhs: str
    rhs: str
    note: Optional[str] = None


class TrialOutcome(BaseModel):
    trial: int
    status: TrialStatus
    instance: Dict[str, Any] = {}
    lhs: str = ""
    rhs: str = ""
    note: Optional[str] = None


class VerifyReport(BaseModel):
    rule: RuleId
    spec: InstanceSpec
    attempted: int = 0
    passed: int = 0
    failed: int = 0
    skipped: int = 0
    failures: List[FailureRecord] = []
    wall_time: float = Field(default=0.0, exclude=True)

    @model_validator(mode="after")
    def check_counts(self):
        if self.passed + self.failed != self.attempted:
            raise ValueError("passed + failed must equal attempted")
        if len(self.failures) != self.failed:
            raise ValueError("every failed trial needs a failure record")
        return self
