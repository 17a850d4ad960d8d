from typing import List, Literal, Union
from pydantic import BaseModel, ConfigDict, Field


class CopyOp(BaseModel):
    model_config = ConfigDict(frozen=True)

    op: Literal["copy"] = "copy"
    offset: int = Field(ge=0)
    length: int = Field(ge=0)

    @property
    def output_length(self) -> int:
        return self.length


class InsertOp(BaseModel):
    model_config = ConfigDict(frozen=True)

    op: Literal["insert"] = "insert"
    data: bytes

    @property
    def output_length(self) -> int:
        return len(self.data)


PatchOp = Union[CopyOp, InsertOp]


class PatchBlob(BaseModel):
    """Edit script turning a base of base_len bytes into a target of target_len bytes"""
    model_config = ConfigDict(frozen=True)

    base_len: int = Field(ge=0)
    target_len: int = Field(ge=0)
    ops: List[PatchOp] = Field(default_factory=list)


class PatchStats(BaseModel):
    ops: int
    copy_ops: int
    insert_ops: int
    copied_bytes: int
    inserted_bytes: int
    encoded_size: int
