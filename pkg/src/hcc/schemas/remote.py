from typing import Literal

from pydantic import BaseModel, Field, StrictStr, model_validator

from hcc.errors import ConfigTypeError


class CompletionRequest(BaseModel):
    prompt: str
    max_tokens: int = Field(ge=0)
    temperature: float = Field(default=0.0, ge=0.0)


class CompletionResponse(BaseModel):
    completion: StrictStr


class RemoteBackend(BaseModel):
    base_url: str | None = None
    api_key: str | None = None
    timeout_ms: int = Field(default=10000, ge=1)
    mode: Literal["live", "stub"] = "stub"

    @model_validator(mode="after")
    def validate_live_url(self):
        # a DataError, so pydantic re-raises it unwrapped
        if self.mode == "live" and not self.base_url:
            raise ConfigTypeError("remote.url", "live mode requires a base URL")
        return self

    @classmethod
    def new(cls, base_url: str | None, api_key: str | None, timeout_ms: int) -> "RemoteBackend":
        return cls(
            base_url=base_url,
            api_key=api_key,
            timeout_ms=timeout_ms,
            mode="live" if base_url else "stub",
        )
