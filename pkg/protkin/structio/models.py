from pydantic import BaseModel, ConfigDict, Field, field_validator


class AtomRecord(BaseModel):
    """The subset of a PDB ATOM record this package reads and writes."""

    model_config = ConfigDict(frozen=True)

    serial: int = Field(gt=0)
    atom_name: str = Field(min_length=1, max_length=4)
    residue_code: str = Field(min_length=1, max_length=3)
    chain_id: str = Field(default="A", min_length=1, max_length=1)
    residue_seq: int = Field(gt=0)
    position: tuple[float, float, float]

    @field_validator("atom_name")
    @classmethod
    def strip_name(cls, value: str) -> str:
        name = value.strip()
        if not name:
            raise ValueError("atom name is blank")
        return name

    @property
    def element(self) -> str:
        return self.atom_name[0]
