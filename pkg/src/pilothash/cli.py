"""Command-line client for the pilothash service.

`pilothash serve` starts the service; every other subcommand talks to a
running instance over HTTP (default http://127.0.0.1:8123, override with
--server or PILOTHASH_SERVER). Builds, benchmarks, and sweeps execute
server-side so timings are in-process; the client only moves files and
formats output.

Exit codes: 0 success, 2 validation failure, 3 build/runtime failure.
"""

from __future__ import annotations

import base64
import json
import sys

import click
import httpx

DEFAULT_SERVER = "http://127.0.0.1:8123"

EXIT_VALIDATION = 2
EXIT_FAILURE = 3


def _client(server: str) -> httpx.Client:
    return httpx.Client(base_url=server, timeout=None)


def _fail(message: str, code: int):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _request(client: httpx.Client, method: str, path: str, **kwargs):
    try:
        resp = client.request(method, path, **kwargs)
    except httpx.HTTPError as exc:
        _fail(f"cannot reach server: {exc}", EXIT_FAILURE)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail", resp.text)
        except Exception:
            detail = resp.text
        code = EXIT_VALIDATION if resp.status_code in (400, 422) else EXIT_FAILURE
        _fail(f"{resp.status_code}: {detail}", code)
    return resp


def _emit(payload: dict, fmt: str, csv_text: str | None = None):
    if fmt == "json":
        click.echo(json.dumps(payload, indent=2, sort_keys=True))
    elif fmt == "csv":
        if csv_text is not None:
            click.echo(csv_text, nl=False)
        else:
            keys = sorted(payload)
            click.echo(",".join(keys))
            click.echo(",".join(str(payload[k]) for k in keys))
    else:
        for k in sorted(payload):
            v = payload[k]
            if isinstance(v, float):
                v = f"{v:.4f}"
            click.echo(f"{k:>24}: {v}")


server_option = click.option(
    "--server",
    envvar="PILOTHASH_SERVER",
    default=DEFAULT_SERVER,
    show_default=True,
    help="base URL of a running pilothash service",
)
output_option = click.option(
    "--output",
    type=click.Choice(["human", "csv", "json"]),
    default="human",
    show_default=True,
)


@click.group()
def main():
    """Minimal perfect hashing benchmark client."""


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8123, show_default=True)
def serve(host: str, port: int):
    """Run the pilothash service in the foreground."""
    from .service import serve as run

    run(host=host, port=port)


@main.command("gen-keys")
@click.option("--n", required=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, type=click.Path(writable=True, dir_okay=False))
def gen_keys_cmd(n: int, seed: int, out: str):
    """Write n distinct random keys (one per line) to a file."""
    from .keygen import gen_keys

    corpus = gen_keys(n, seed)
    corpus.save(out)
    click.echo(f"wrote {len(corpus)} keys to {out}")


@main.command()
@click.option("--n", required=True, type=click.IntRange(min=1))
@click.option("--lambda", "lambda_", default=8.0, show_default=True, type=float)
@click.option("--partition-size", default=2500.0, show_default=True, type=float)
@click.option(
    "--encoder",
    default="ic-r",
    show_default=True,
    help="ic-r, ic-c, mixed:<t>, mono-r, or mono-c",
)
@click.option(
    "--assignment",
    type=click.Choice(["uniform", "skew", "beta-eps", "beta-star"]),
    default="beta-eps",
    show_default=True,
)
@click.option("--epsilon", type=float, default=None, help="override the default damping")
@click.option("--threads", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True)
@click.option("--save", type=click.Path(writable=True, dir_okay=False), default=None)
@output_option
@server_option
def build(n, lambda_, partition_size, encoder, assignment, epsilon, threads, seed, save, output, server):
    """Build a hash function over a generated corpus and report metrics."""
    body = {
        "n": n,
        "seed": seed,
        "lambda": lambda_,
        "partition_size": partition_size,
        "encoder": encoder,
        "assignment": assignment,
        "epsilon": epsilon,
        "threads": threads,
    }
    with _client(server) as client:
        resp = _request(client, "POST", "/build", json=body)
        payload = resp.json()
        if not payload.get("verified", False):
            _fail("built structure failed bijection verification", EXIT_FAILURE)
        if save:
            raw = _request(client, "GET", f"/mphf/{payload['mphf_id']}/bytes").content
            with open(save, "wb") as fh:
                fh.write(raw)
            payload["saved_to"] = save
            payload["serialized_bytes"] = len(raw)
    _emit(payload, output)


@main.command("query-bench")
@click.option("--load", type=click.Path(exists=True, dir_okay=False), default=None,
              help="serialized structure to benchmark (uploaded to the server)")
@click.option("--id", "mphf_id", default=None, help="benchmark an existing server-side structure")
@click.option("--n", required=True, type=click.IntRange(min=1), help="corpus size (must match the build)")
@click.option("--seed", default=0, show_default=True, help="corpus seed (must match the build)")
@output_option
@server_option
def query_bench(load, mphf_id, n, seed, output, server):
    """Verify a structure over its corpus, then time one query per key."""
    if (load is None) == (mphf_id is None):
        _fail("give exactly one of --load or --id", EXIT_VALIDATION)
    with _client(server) as client:
        if load is not None:
            with open(load, "rb") as fh:
                data = fh.read()
            imported = _request(
                client,
                "POST",
                "/mphf/import",
                json={"data_base64": base64.b64encode(data).decode("ascii")},
            ).json()
            mphf_id = imported["mphf_id"]
        resp = _request(
            client, "POST", "/bench/query", json={"mphf_id": mphf_id, "n": n, "seed": seed}
        )
        payload = resp.json()
        payload["mphf_id"] = mphf_id
    _emit(payload, output)


@main.command()
@click.option("--n", required=True, type=click.IntRange(min=1))
@click.option("--lambda", "lambdas", multiple=True, type=float, default=(8.0,),
              show_default=True, help="repeatable")
@click.option("--assignment", "assignments", multiple=True,
              type=click.Choice(["uniform", "skew", "beta-eps", "beta-star"]),
              default=("uniform", "skew", "beta-eps"), show_default=True, help="repeatable")
@click.option("--partition-size", default=2500.0, show_default=True, type=float)
@click.option("--epsilon", type=float, default=None)
@click.option("--threads", default=1, show_default=True, type=click.IntRange(min=1))
@click.option("--seed", default=0, show_default=True)
@output_option
@server_option
def analyze(n, lambdas, assignments, partition_size, epsilon, threads, seed, output, server):
    """Sweep assignment functions and report search work and space."""
    body = {
        "n": n,
        "seed": seed,
        "lambdas": list(lambdas),
        "assignments": list(assignments),
        "partition_size": partition_size,
        "epsilon": epsilon,
        "threads": threads,
    }
    with _client(server) as client:
        payload = _request(client, "POST", "/analyze", json=body).json()
    if output == "csv":
        click.echo(payload["csv"], nl=False)
    elif output == "json":
        click.echo(json.dumps(payload["rows"], indent=2, sort_keys=True))
    else:
        for row in payload["rows"]:
            click.echo(
                f"{row['assignment']:>10}  lambda={row['lambda_']:<5g}"
                f" trials/key={row['trials_per_key']:<10.2f}"
                f" bits/key={row['bits_per_key']:<8.4f}"
                f" wall={row['wall_seconds']:.3f}s"
            )


if __name__ == "__main__":
    main()
