"""Command-line front end.

Every subcommand is a thin client of the HTTP service: by default the
app is driven in-process, --server points at a running instance
instead.  Big integers are hex on both input and output (0x prefix
optional on input).  Exit codes: 0 success, 1 invalid config or a
named bound violation, 2 verification mismatch.
"""

from __future__ import annotations

import asyncio
import json
import sys
from pathlib import Path

import click
import httpx


class ServiceClient:
    def __init__(self, server: str | None):
        self.server = server

    def call(self, method: str, path: str, payload: dict | None = None,
             params: dict | None = None) -> dict:
        try:
            if self.server:
                with httpx.Client(base_url=self.server, timeout=600.0) as c:
                    r = c.request(method, path, json=payload, params=params)
            else:
                r = asyncio.run(self._local(method, path, payload, params))
        except httpx.HTTPError as exc:
            click.echo(f"error: service unreachable: {exc}", err=True)
            sys.exit(1)
        if r.status_code >= 400:
            self._fail(r)
        return r.json()

    async def _local(self, method, path, payload, params):
        from .service import app
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(transport=transport,
                                     base_url="http://rrns") as c:
            return await c.request(method, path, json=payload, params=params)

    @staticmethod
    def _fail(r) -> None:
        try:
            detail = r.json().get("detail", {})
        except ValueError:
            detail = {}
        if isinstance(detail, dict) and detail:
            kind = detail.get("kind", "error")
            name = detail.get("name")
            msg = detail.get("message", "")
            where = f"{kind}[{name}]" if name else kind
            click.echo(f"error: {where}: {msg}", err=True)
        else:
            click.echo(f"error: HTTP {r.status_code}: {r.text}", err=True)
        sys.exit(1)


def _to_int(text: str) -> int:
    s = text.strip().lower().removeprefix("0x")
    try:
        return int(s, 16)
    except ValueError:
        raise click.BadParameter(f"{text!r} is not a hex integer")


def _hx(text_or_int) -> str:
    v = int(text_or_int, 16) if isinstance(text_or_int, str) else text_or_int
    return format(v, "x")


@click.group()
@click.option("--server", default=None, metavar="URL",
              help="Base URL of a running service; default runs in-process.")
@click.pass_context
def main(ctx, server):
    """Recursive residue arithmetic stacks: build, run, verify."""
    ctx.obj = ServiceClient(server)


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.pass_obj
def build(client: ServiceClient, config_path, out_dir):
    """Validate a config, build the stack, write manifest and tables."""
    cfg = json.loads(Path(config_path).read_text())
    body = client.call("POST", "/stacks/build",
                       {"config": cfg, "directory": out_dir})
    click.echo(f"built {body['layer_count']}-layer stack "
               f"(word size {body['word_size']}, {body['style']}) "
               f"-> {body['directory']}")
    click.echo(f"capacity {_hx(int(body['capacity']))}")
    for chk in body["checks"]:
        mark = "ok" if chk["ok"] else "FAIL"
        click.echo(f"  check {chk['name']}: {chk['lhs']} vs {chk['rhs']} "
                   f"[{mark}]")
    for i, lvl in enumerate(body["predicted_costs"], start=1):
        click.echo(f"  level {i}: add={lvl['add']} mul={lvl['mul']} "
                   f"reduce={lvl['reduce']} montgomery={lvl['montgomery']}")
    click.echo(f"tables sha256 {body['tables_sha256']}")


@main.command("set-modulus")
@click.option("--stack", "stack_dir", required=True, type=click.Path())
@click.option("--modulus", required=True, metavar="HEX")
@click.pass_obj
def set_modulus(client: ServiceClient, stack_dir, modulus):
    """Derive and persist the constants for a working modulus."""
    body = client.call("POST", "/stacks/set-modulus",
                       {"directory": stack_dir,
                        "modulus": hex(_to_int(modulus))})
    click.echo(f"modulus {_hx(body['modulus'])} installed "
               f"({body['montgomery_factor_bits']}-bit Montgomery factor)")


@main.command()
@click.option("--stack", "stack_dir", required=True, type=click.Path())
@click.option("--modulus", default=None, metavar="HEX",
              help="Use this modulus for the run without persisting it.")
@click.option("--base", "bases", multiple=True, required=True, metavar="HEX")
@click.option("--exponent", "exponents", multiple=True, required=True,
              metavar="HEX")
@click.option("--verify", is_flag=True,
              help="Cross-check each result against the integer oracle.")
@click.pass_obj
def exp(client: ServiceClient, stack_dir, modulus, bases, exponents, verify):
    """Modular exponentiation; prints one hex result per line."""
    payload = {"directory": stack_dir,
               "bases": [hex(_to_int(b)) for b in bases],
               "exponents": [hex(_to_int(e)) for e in exponents],
               "verify": verify}
    if modulus is not None:
        payload["modulus"] = hex(_to_int(modulus))
    body = client.call("POST", "/exp", payload)
    for r in body["results"]:
        click.echo(_hx(r))
    ops = body["operations"]
    click.echo(f"# ops table={ops['table']} native={ops['native']} "
               f"total={ops['total']} elapsed={body['elapsed_seconds']:.3f}s",
               err=True)
    if verify:
        if body["mismatches"]:
            click.echo(f"verification FAILED: {body['mismatches']} "
                       "mismatch(es)", err=True)
            sys.exit(2)
        click.echo("verification ok", err=True)


@main.command()
@click.option("--stack", "stack_dir", required=True, type=click.Path())
@click.option("--trials", default=100, show_default=True,
              help="Montgomery products to run.")
@click.option("--batch", default=1, show_default=True)
@click.pass_obj
def bench(client: ServiceClient, stack_dir, trials, batch):
    """Measured vs predicted operation counts."""
    body = client.call("POST", "/bench",
                       {"directory": stack_dir, "products": trials,
                        "batch": batch})
    per = body["measured_per_product"]
    click.echo(f"{'class':<10}{'measured':>12}{'predicted':>12}")
    click.echo(f"{'table':<10}{per['table']:>12}{'':>12}")
    click.echo(f"{'native':<10}{per['native']:>12}{'':>12}")
    click.echo(f"{'total':<10}{per['total']:>12}"
               f"{body['predicted_montgomery']:>12}")
    click.echo(f"overhead {body['overhead_percent']:+.3f}% over "
               f"{body['products']}x{body['batch']} products "
               f"in {body['elapsed_seconds']:.3f}s")
    click.echo("bench-record " + json.dumps(body, sort_keys=True))


@main.command()
@click.option("--config", "config_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--stack", "stack_dir", default=None, type=click.Path())
@click.option("--trials", default=64, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.pass_obj
def selftest(client: ServiceClient, config_path, stack_dir, trials, seed):
    """Random cross-check of the stack against the integer oracle."""
    if (config_path is None) == (stack_dir is None):
        raise click.UsageError("pass exactly one of --config or --stack")
    payload = {"trials": trials, "seed": seed}
    if config_path is not None:
        payload["config"] = json.loads(Path(config_path).read_text())
    else:
        payload["directory"] = stack_dir
    body = client.call("POST", "/selftest", payload)
    bad = (body["congruence_failures"] + body["closure_failures"]
           + body["roundtrip_failures"])
    click.echo(f"selftest: {body['trials']} trials over "
               f"{body['moduli_tested']} moduli, "
               f"congruence failures {body['congruence_failures']}, "
               f"closure failures {body['closure_failures']}, "
               f"round-trip failures {body['roundtrip_failures']}")
    if bad:
        sys.exit(2)


@main.command()
@click.option("--layers", required=True, metavar="K1,L1[;K2,L2...]",
              help="Base sizes per layer, bottom first.")
@click.option("--bits", default=None, type=int,
              help="Target modulus width for the closed-form minimum.")
@click.option("--word-size", default=None, type=int)
@click.pass_obj
def cost(client: ServiceClient, layers, bits, word_size):
    """Predicted operation counts from the cost recurrences."""
    try:
        pairs = [[int(v) for v in part.split(",")]
                 for part in layers.split(";") if part]
    except ValueError:
        raise click.BadParameter("layers: expected K,L pairs separated by ;")
    payload: dict = {"layers": pairs}
    if bits is not None:
        payload["bits"] = bits
    if word_size is not None:
        payload["word_size"] = word_size
    body = client.call("POST", "/cost", payload)
    for i, lvl in enumerate(body["levels"]):
        click.echo(f"level {i + 1}: add={lvl['add']} mul={lvl['mul']} "
                   f"reduce={lvl['reduce']} montgomery={lvl['montgomery']}")
    if body["simplified_level3"] is not None:
        click.echo(f"simplified level-3 montgomery: "
                   f"{body['simplified_level3']}")
    if body["optimal_bottom_width"] is not None:
        click.echo(f"optimal bottom base size: "
                   f"{body['optimal_bottom_width']:.4f}")
        click.echo(f"closed-form minimum ops: "
                   f"{body['simplified_min_ops']:.2f}")


@main.command()
@click.option("--stack", "stack_dir", required=True, type=click.Path())
@click.pass_obj
def manifest(client: ServiceClient, stack_dir):
    """Print the stored manifest as JSON."""
    body = client.call("GET", "/stacks/manifest", None,
                       {"directory": stack_dir})
    click.echo(json.dumps(body["manifest"], indent=2, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import app
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
