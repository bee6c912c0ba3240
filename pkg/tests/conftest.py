import asyncio
import json
from pathlib import Path

import pytest

from rrns.builder import load_config
from rrns.stack import Stack

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def read_config(name: str) -> dict:
    return json.loads((CONFIGS / f"{name}.json").read_text())


def build_stack(name_or_cfg) -> Stack:
    cfg = (read_config(name_or_cfg) if isinstance(name_or_cfg, str)
           else name_or_cfg)
    return Stack.build(load_config(cfg))


SMALL_TOWER = {
    "word_size": 8, "style": "symmetric",
    "bottom": {"redundant": 17, "moduli": [256, 253, 251, 249]},
    "layers": [
        {"eps": "1/2"},
        {"eps": "1/2",
         "base": {"rule": "largest-primes", "count": 6,
                  "residue_class": [4, 3]},
         "redundant_cofactor": 249}],
}


def small_tower_config(**flags) -> dict:
    cfg = json.loads(json.dumps(SMALL_TOWER))
    if flags:
        cfg["flags"] = flags
    return cfg


@pytest.fixture(scope="session")
def remark_stack() -> Stack:
    stack = build_stack("remark_sound")
    stack.set_modulus(23)
    return stack


@pytest.fixture(scope="session")
def staged_stack() -> Stack:
    stack = build_stack("staged_t8")
    stack.set_modulus((1 << 200) + 235)
    return stack


def api(method: str, path: str, payload: dict | None = None,
        params: dict | None = None):
    import httpx

    from rrns.service import app

    async def go():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://test") as c:
            return await c.request(method, path, json=payload, params=params)

    return asyncio.run(go())
