"""Command-line front end.

The CLI is a thin client of the HTTP service: every command builds a request,
sends it to either an in-process application instance (default) or a remote
server (``--server``), and writes the returned CSV artifacts.  Exit codes:
0 success, 1 I/O failure, 2 invalid arguments or configuration, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import configparser
import sys

EXIT_OK = 0
EXIT_IO = 1
EXIT_INVALID = 2
EXIT_SOLVER = 3

SCHEME_ALIASES = {
    "galpha": "generalized_alpha",
    "generalized-alpha": "generalized_alpha",
    "ed": "ed_alpha",
    "ed-alpha": "ed_alpha",
}

SCENARIO_ALIASES = {
    "bilateral": "slider_crank_bilateral_rigid",
    "rigid": "slider_crank_rigid",
    "t1": "slider_crank_t1",
    "t2": "slider_crank_t2",
}

# model keys whose table names differ from the parameter fields
_MODEL_KEY_ALIASES = {"T_crank": "torque", "T": "torque"}
_CORNER_TUPLES = {"eps_N", "eps_T", "mu"}


def _scheme(name: str) -> str:
    return SCHEME_ALIASES.get(name, name)


def _scenario(name: str) -> str:
    return SCENARIO_ALIASES.get(name, name)


def _coerce(value: str):
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        pass
    return value


def _normalize_model_overrides(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        key = _MODEL_KEY_ALIASES.get(key, key)
        if key in _CORNER_TUPLES and not isinstance(value, (list, tuple)):
            value = (float(value),) * 4
        out[key] = value
    return out


def load_config(path: str) -> dict:
    """Flat key=value file with section headers [model], [integrator], [run]."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path, "r", encoding="utf-8") as f:
        parser.read_file(f)
    cfg = {"model": {}, "integrator": {}, "run": {}}
    for section in parser.sections():
        target = cfg.setdefault(section, {})
        for key, value in parser.items(section):
            target[key] = _coerce(value)
    cfg["model"] = _normalize_model_overrides(cfg.get("model", {}))
    return cfg


def make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=None)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _write_output(text: str, path: str | None):
    if path:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def _post(client, url, payload):
    resp = client.post(url, json=payload)
    if resp.status_code == 409:
        print(f"solver failure: {resp.json().get('detail')}", file=sys.stderr)
        raise SystemExit(EXIT_SOLVER)
    if resp.status_code >= 400:
        try:
            detail = resp.json().get("detail")
        except Exception:
            detail = resp.text
        print(f"request failed ({resp.status_code}): {detail}", file=sys.stderr)
        raise SystemExit(EXIT_INVALID)
    return resp.json()


def cmd_simulate(args) -> int:
    cfg = load_config(args.config) if args.config else {"model": {}, "integrator": {}, "run": {}}
    run = cfg["run"]
    overrides = dict(cfg["model"])
    for item in args.set or []:
        key, _, value = item.partition("=")
        overrides[key] = _coerce(value)
    overrides = _normalize_model_overrides(overrides)
    integrator = dict(cfg["integrator"])
    if args.integrator:
        integrator["scheme"] = _scheme(args.integrator)
    if args.dt is not None:
        integrator["dt"] = args.dt
    if args.rho_inf is not None:
        integrator["rho_inf"] = args.rho_inf
    integrator["scheme"] = _scheme(integrator.get("scheme", "bathe"))
    payload = {
        "scenario": _scenario(args.scenario or run.get("scenario", "")),
        "integrator": integrator,
        "t_end": args.t_end if args.t_end is not None else run.get("t_end", 0.05),
        "model_overrides": overrides,
    }
    channels = args.channels or run.get("channels")
    if channels:
        payload["channels"] = channels.split(",") if isinstance(channels, str) else channels
    with make_client(args.server) as client:
        data = _post(client, "/simulate", payload)
    out = args.out or run.get("out")
    try:
        _write_output(data["csv"], out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    print(
        f"{data['scenario']}: {data['n_steps']} steps, {data['n_impacts']} impacts, "
        f"t_final = {data['final_time']:.6g} s",
        file=sys.stderr,
    )
    if not data["completed"]:
        print(
            f"solver failure at step {data['failed_step']} (t = {data['failed_time']:.6g} s): "
            f"{data['failure']}",
            file=sys.stderr,
        )
        return EXIT_SOLVER
    return EXIT_OK


def cmd_spectral(args) -> int:
    params = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        params[key] = _coerce(value)
    payload = {
        "scheme": _scheme(args.scheme),
        "rho_inf": args.rho_inf,
        "parameters": params,
        "n_points": args.n_points,
        "dt_over_T_min": args.min,
        "dt_over_T_max": args.max,
        "numerical": args.numerical,
    }
    with make_client(args.server) as client:
        data = _post(client, "/spectral", payload)
    try:
        _write_output(data["csv"], args.out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = load_config(args.config) if args.config else {"model": {}, "integrator": {}, "run": {}}
    overrides = dict(cfg["model"])
    for item in args.set or []:
        key, _, value = item.partition("=")
        overrides[key] = _coerce(value)
    overrides = _normalize_model_overrides(overrides)
    integrator = dict(cfg["integrator"])
    integrator["scheme"] = _scheme(args.integrator or integrator.get("scheme", "generalized_alpha"))
    try:
        dts = [float(x) for x in args.dts.split(",")]
    except ValueError:
        print("invalid --dts list", file=sys.stderr)
        return EXIT_INVALID
    integrator.setdefault("dt", max(dts))
    payload = {
        "scenario": _scenario(args.scenario),
        "integrator": integrator,
        "dts": dts,
        "channel": args.channel,
        "t_end": args.t_end,
        "model_overrides": overrides,
    }
    with make_client(args.server) as client:
        data = _post(client, "/converge", payload)
    print(f"channel {data['channel']}: slope = {data['slope']:.4f}")
    for dt, err in zip(data["dts"], data["errors"]):
        print(f"  dt = {dt:.3e}  err = {err:.6e}")
    if args.out:
        try:
            _write_output(data["csv"], args.out)
        except OSError as exc:
            print(f"cannot write output: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


def cmd_modes(args) -> int:
    payload = {
        "table": args.table,
        "n_elements": args.n_elements,
        "bc": args.bc,
        "n_modes": args.n_modes,
    }
    with make_client(args.server) as client:
        data = _post(client, "/modes", payload)
    print(f"{data['n_elastic']} elastic DOFs ({data['bc']})", file=sys.stderr)
    try:
        _write_output(data["csv"], args.out)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def cmd_scenarios(args) -> int:
    with make_client(args.server) as client:
        resp = client.get("/scenarios")
    for name in resp.json()["scenarios"]:
        print(name)
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nonsmooth-mbs",
        description="Mixed timestepping for nonsmooth flexible multibody systems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--server", help="base URL of a running service (default: in-process)")

    p = sub.add_parser("simulate", help="run a scenario and write a trajectory CSV")
    p.add_argument("--scenario", help="scenario name (see `scenarios`)")
    p.add_argument("--integrator", help="scheme: generalized_alpha|galpha|bathe|ed_alpha|moreau")
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--rho-inf", dest="rho_inf", type=float)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    p.add_argument("--channels", help="comma-separated channel names")
    p.add_argument("--config", help="key=value config file with [model]/[integrator]/[run] sections")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="model parameter override")
    common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectral", help="spectral-radius / period-error sweep CSV")
    p.add_argument("--scheme", default="generalized_alpha")
    p.add_argument("--rho-inf", dest="rho_inf", type=float, default=0.8)
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="scheme parameter override")
    p.add_argument("--n-points", dest="n_points", type=int, default=400)
    p.add_argument("--min", type=float, default=1e-3, help="smallest dt/T")
    p.add_argument("--max", type=float, default=1e2, help="largest dt/T")
    p.add_argument("--numerical", action="store_true", help="force the stepping propagator")
    p.add_argument("--out", help="output CSV path (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_spectral)

    p = sub.add_parser("converge", help="self-referenced convergence study")
    p.add_argument("--scenario", required=True)
    p.add_argument("--integrator", default="generalized_alpha")
    p.add_argument("--dts", required=True, help="comma-separated step sizes")
    p.add_argument("--channel", default="q_theta2")
    p.add_argument("--t-end", dest="t_end", type=float, default=0.05)
    p.add_argument("--out", help="optional CSV path for the (dt, error) table")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    common(p)
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("modes", help="elastic eigenfrequencies of the rod")
    p.add_argument("--table", default="table1", choices=["table1", "table2"])
    p.add_argument("--n-elements", dest="n_elements", type=int, default=20)
    p.add_argument("--bc", default="tangential_clamped_free")
    p.add_argument("--n-modes", dest="n_modes", type=int)
    p.add_argument("--out", help="output CSV path (default: stdout)")
    common(p)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("scenarios", help="list available scenarios")
    common(p)
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8707)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"file not found: {exc}", file=sys.stderr)
        return EXIT_IO
    except configparser.Error as exc:
        print(f"config parse error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
