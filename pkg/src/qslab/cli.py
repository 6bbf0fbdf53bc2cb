"""Thin command-line client for the experiment service.

Subcommands map one-to-one onto service endpoints; without --server the app
is driven in process, so no daemon is needed. Artifacts returned by the
service are written verbatim into the --out directory.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Dict, List, Optional

import httpx

DEFAULT_OUT = "qslab-out"


class CliError(Exception):
    pass


class ServiceClient:
    """POSTs to a remote server or, by default, straight into the app object."""

    def __init__(self, server: Optional[str] = None):
        if server is None:
            import warnings

            with warnings.catch_warnings():
                # the in-process driver import trips deprecation chatter in
                # some starlette builds; it is not actionable for users
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service.app import app

            self._client = TestClient(app)
        else:
            self._client = httpx.Client(base_url=server, timeout=600.0)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            raise CliError(f"{path} failed ({response.status_code}): {response.text}")
        return response.json()


def _load_config(args: argparse.Namespace) -> Dict[str, object]:
    doc: Dict[str, object] = {}
    if getattr(args, "config", None) is not None:
        path = Path(args.config)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read config {path}: {exc}")
        if not isinstance(doc, dict):
            raise CliError(f"config {path} must hold a JSON object")
        doc.pop("schema_version", None)
        if "config" in doc and isinstance(doc["config"], dict):
            doc = doc["config"]
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "replicates", None) is not None:
        doc["replicates"] = args.replicates
    return doc


def _write_artifacts(artifacts: Dict[str, str], out_dir: str) -> List[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in sorted(artifacts.items()):
        path = out / name
        path.write_text(text, encoding="utf-8", newline="")
        written.append(path)
    return written


def _report_artifacts(paths: List[Path]) -> None:
    for path in paths:
        print(f"wrote {path}")


def _csv_list(text: str) -> List[str]:
    return [item for item in text.replace(",", " ").split() if item]


def _int_list(text: str) -> List[int]:
    return [int(item) for item in _csv_list(text)]


def _float_list(text: str) -> List[float]:
    return [float(item) for item in _csv_list(text)]


def _add_common(parser: argparse.ArgumentParser, *, config: bool = True,
                replicates: bool = True, threads: bool = False) -> None:
    if config:
        parser.add_argument("--config", help="JSON experiment config file")
    parser.add_argument("--seed", type=int, help="master seed override")
    if replicates:
        parser.add_argument("--replicates", type=int, help="replicates per cell")
    parser.add_argument("--out", default=DEFAULT_OUT, help="artifact directory")
    if threads:
        parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument(
        "--engine",
        choices=("compact", "full"),
        default="compact",
        help="propagation engine: dense one-step operator or full oracle circuit",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qslab",
        description="Split-operator quantum-simulator lab: evolve wavepackets "
        "on a qubit register and measure fidelity under memory and leak errors.",
    )
    parser.add_argument(
        "--server",
        help="base URL of a running service (default: run the app in process)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evolve", help="single baseline-vs-error run")
    _add_common(p, replicates=False)
    p.add_argument("--replicate", type=int, default=0, help="replicate index")

    p = sub.add_parser("sweep", help="sweep a (qubit, mode, magnitude) grid")
    _add_common(p, threads=True)
    p.add_argument("--modes", type=_csv_list, required=True,
                   help="comma list from alpha,beta,theta,U1,U2")
    p.add_argument("--magnitudes", type=_float_list, required=True,
                   help="comma list of max radians")
    p.add_argument("--qubits", type=_int_list, required=True,
                   help="comma list of target space qubits")

    p = sub.add_parser("tables", help="preset sweeps: memory, leak-u1, leak-u2")
    _add_common(p, config=False, threads=True)
    p.add_argument(
        "--preset",
        action="append",
        choices=("memory", "leak-u1", "leak-u2"),
        help="preset name (repeatable; default: all three)",
    )

    p = sub.add_parser("figures", help="the six |psi(x;t)|^2 preset runs")
    _add_common(p, config=False, replicates=False)
    p.add_argument("--replicate", type=int, default=0, help="replicate index")

    p = sub.add_parser("budget", help="qubit / sampling / gate-cost report")
    p.add_argument("--config", help="JSON experiment config file")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--out", default=DEFAULT_OUT, help="artifact directory")

    p = sub.add_parser("verify", help="run the invariant self-check suite")
    p.add_argument("--seed", type=int, default=0)

    return parser


def _cmd_evolve(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "config": _load_config(args),
        "replicate_index": args.replicate,
        "engine": args.engine,
    }
    data = client.post("/run", payload)
    print(f"final fidelity: {data['final_fidelity']:.6f}")
    _report_artifacts(_write_artifacts(data["artifacts"], args.out))
    return 0


def _print_cells(cells: List[dict]) -> None:
    for c in cells:
        print(
            f"qubit {c['qubit']}  {c['mode']:>5}  max {c['max_radians']:.2f}  "
            f"fidelity {c['mean']:.4f} +/- {c['std']:.4f}  (n={c['n']})"
        )


def _cmd_sweep(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "config": _load_config(args),
        "modes": args.modes,
        "magnitudes": args.magnitudes,
        "qubits": args.qubits,
        "replicates": args.replicates,
        "threads": args.threads,
        "engine": args.engine,
    }
    data = client.post("/sweep", payload)
    _print_cells(data["cells"])
    _report_artifacts(_write_artifacts(data["artifacts"], args.out))
    return 0


def _cmd_tables(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "presets": args.preset or ["memory", "leak-u1", "leak-u2"],
        "seed": args.seed if args.seed is not None else 0,
        "replicates": args.replicates if args.replicates is not None else 200,
        "threads": args.threads,
        "engine": args.engine,
    }
    data = client.post("/tables", payload)
    for name, cells in data["tables"].items():
        print(f"[{name}]")
        _print_cells(cells)
    _report_artifacts(_write_artifacts(data["artifacts"], args.out))
    return 0


def _cmd_figures(client: ServiceClient, args: argparse.Namespace) -> int:
    payload = {
        "seed": args.seed if args.seed is not None else 0,
        "replicate_index": args.replicate,
        "engine": args.engine,
    }
    data = client.post("/figures", payload)
    for run in data["runs"]:
        print(
            f"{run['name']:>9}: final fidelity {run['final_fidelity']:.4f}  "
            f"lag-1 {run['lag_1']:+.3f}  lag-32 {run['lag_32']:+.3f}"
        )
    _report_artifacts(_write_artifacts(data["artifacts"], args.out))
    return 0


def _cmd_budget(client: ServiceClient, args: argparse.Namespace) -> int:
    args.replicates = None
    data = client.post("/budget", {"config": _load_config(args)})
    for key in sorted(data["report"]):
        value = data["report"][key]
        if float(value).is_integer():
            print(f"{key}: {int(value)}")
        else:
            print(f"{key}: {value:.6g}")
    _report_artifacts(_write_artifacts(data["artifacts"], args.out))
    return 0


def _cmd_verify(client: ServiceClient, args: argparse.Namespace) -> int:
    data = client.post("/verify", {"seed": args.seed})
    for check in data["checks"]:
        mark = "ok  " if check["passed"] else "FAIL"
        print(f"{mark} {check['name']} - {check['detail']}")
    if data["passed"]:
        print("all checks passed")
        return 0
    print("some checks FAILED")
    return 1


_COMMANDS = {
    "evolve": _cmd_evolve,
    "sweep": _cmd_sweep,
    "tables": _cmd_tables,
    "figures": _cmd_figures,
    "budget": _cmd_budget,
    "verify": _cmd_verify,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        client = ServiceClient(args.server)
        return _COMMANDS[args.command](client, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except httpx.HTTPError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
