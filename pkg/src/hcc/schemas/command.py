from typing import Any, Dict, List

from pydantic import BaseModel, Field


class CommandRequest(BaseModel):
    command: str
    params: Dict[str, Any] = Field(default_factory=dict)


class CommandResult(BaseModel):
    command: str
    output: str | None = None
    files: List[str] = Field(default_factory=list)
