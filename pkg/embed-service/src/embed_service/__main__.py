"""Run the embedding service: python -m embed_service --model hashed:384."""

import argparse

import uvicorn

from .app import ServiceConfig, create_app


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--model",
        default="hashed:384",
        help="model id: 'hashed:<dim>' or a sentence-transformers name",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8090)
    parser.add_argument("--max-batch", type=int, default=256)
    parser.add_argument("--device", default="cpu")
    args = parser.parse_args()

    config = ServiceConfig(
        model=args.model,
        host=args.host,
        port=args.port,
        max_batch=args.max_batch,
        device=args.device,
    )
    uvicorn.run(create_app(config), host=config.host, port=config.port, log_level="warning")


if __name__ == "__main__":
    main()
