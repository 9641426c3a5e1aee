"""Shared fixtures: one live service instance on an ephemeral port.

The model loads once per session from the local cache; tests run offline
so no network is touched.
"""

import os
import socket
import threading
import time

import pytest
import uvicorn

os.environ.setdefault("HF_HUB_OFFLINE", "1")

from scoring_service import CrossEncoderScorer, ServiceConfig, create_app

SERVER_MAX_BATCH = 16


@pytest.fixture(scope="session")
def service_config():
    return ServiceConfig(max_batch=SERVER_MAX_BATCH, port=0)


@pytest.fixture(scope="session")
def scorer(service_config):
    return CrossEncoderScorer(
        service_config.model_name,
        max_length=service_config.max_length,
        batch_size=service_config.max_batch,
    )


@pytest.fixture(scope="session")
def base_url(scorer, service_config):
    app = create_app(scorer, service_config)
    sock = socket.socket()
    sock.bind((service_config.host, 0))
    port = sock.getsockname()[1]
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    thread = threading.Thread(target=server.run, kwargs={"sockets": [sock]}, daemon=True)
    thread.start()
    deadline = time.monotonic() + 30
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("service did not start within 30 s")
        time.sleep(0.05)
    yield f"http://{service_config.host}:{port}"
    server.should_exit = True
    thread.join(timeout=10)
