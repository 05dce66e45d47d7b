import logging

from fastapi import APIRouter, Request, Response
from pydantic import ValidationError
from starlette.responses import JSONResponse

from hcc.errors import HccError
from hcc.generator import NextTokenModel, completion_text, generate
from hcc.lexer import tokenize_code
from hcc.remote import COMPLETE_PATH
from hcc.schemas.remote import CompletionRequest, CompletionResponse
from hcc.vocabulary import Vocabulary


logger = logging.getLogger(__name__)


class CompletionRouter(APIRouter):
    """
    Server side of the remote completion protocol over a local model. Mount it
    on a FastAPI app; nothing in this package starts a server.
    """
    AUTH_HEADER_KEY: str = "authorization"

    def __init__(self, model: NextTokenModel, vocab: Vocabulary, api_key: str | None = None, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.model = model
        self.vocab = vocab
        self.api_key = api_key

        self.add_api_route(COMPLETE_PATH, self.handle_complete, methods=["POST"])

    def _authorized(self, request: Request) -> bool:
        if self.api_key is None:
            return True
        return request.headers.get(self.AUTH_HEADER_KEY) == f"Bearer {self.api_key}"

    async def handle_complete(self, request: Request) -> Response:
        if not self._authorized(request):
            return Response(status_code=401, content="missing or invalid bearer token")

        content_type = request.headers.get("content-type", "")
        if "application/json" not in content_type:
            return Response(status_code=415, content="content-type must be application/json")

        try:
            body = await request.json()
        except Exception as e:
            return JSONResponse(status_code=400, content={"error": f"cannot parse request body: {str(e)}"})

        try:
            completion_request = CompletionRequest.model_validate(body)
        except ValidationError as e:
            return JSONResponse(status_code=422, content={"error": e.errors()[0]["msg"]})

        try:
            prefix = self.vocab.encode(tokenize_code(completion_request.prompt))
            temperature = completion_request.temperature or None
            ids = generate(self.model, prefix, completion_request.max_tokens, temperature=temperature)
        except HccError as e:
            return JSONResponse(status_code=400, content={"error": str(e)})

        logger.debug("completed %d tokens", len(ids))
        return JSONResponse(content=CompletionResponse(completion=completion_text(ids, self.vocab)).model_dump())
