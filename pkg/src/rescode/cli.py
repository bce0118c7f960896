"""Command-line interface: ``rescode {entropy,bound,simulate,schurweyl}``.

Exit codes: 0 success, 1 numerical-domain failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import bounds, codesim, entropy, schurweyl, twirl
from .errors import RescodeError
from .qcore import (
    as_density_matrix,
    channel_from_json,
    load_matrix,
    projector,
    tensor_power,
)

STATE_BUILDERS = ("bell", "plus", "uniform_superposition(d)", "optimal_bipartite(d)", "gibbs(beta)", "<file.json>")
RDM_BUILDERS = ("dephasing", "depolarizing", "local(dA,dB)", "permutation(n,d)", "collective(n,d)", "<file.json>")
SIGMA_BUILDERS = ("dephased", "depolarized", "local-twirled[(dA,dB)]", "permutation-twirled(n,d)",
                  "collective-twirled(n,d)", "<any state builder>")


class UsageError(Exception):
    pass


def _call(text: str) -> tuple[str, list[float]]:
    m = re.fullmatch(r"\s*([A-Za-z_][\w-]*)\s*(?:\((.*)\))?\s*", text)
    if not m:
        raise UsageError(f"cannot parse builder {text!r}")
    name, args = m.group(1), m.group(2)
    vals = [float(a) for a in args.split(",")] if args and args.strip() else []
    return name, vals


def _ints(vals, count, name):
    if len(vals) != count or any(v != int(v) for v in vals):
        raise UsageError(f"{name} expects {count} integer argument(s)")
    return [int(v) for v in vals]


def _is_file(text: str) -> bool:
    return text.endswith(".json") or Path(text).is_file()


def _hamiltonian(args) -> np.ndarray:
    if args.hamiltonian:
        return load_matrix(args.hamiltonian)
    return np.diag([0.0, 1.0])


def build_state(text: str, args) -> np.ndarray:
    if _is_file(text):
        return as_density_matrix(load_matrix(text))
    name, vals = _call(text)
    if name == "bell" and not vals:
        return projector(twirl.bell_state())
    if name == "plus" and not vals:
        return projector(twirl.uniform_superposition(2))
    if name == "uniform_superposition":
        return projector(twirl.uniform_superposition(*_ints(vals, 1, name)))
    if name == "optimal_bipartite":
        return projector(twirl.optimal_bipartite_state(*_ints(vals, 1, name)))
    if name == "gibbs" and len(vals) == 1:
        return bounds.gibbs_state(_hamiltonian(args), vals[0])
    raise UsageError(f"unknown state {text!r}; valid builders: {', '.join(STATE_BUILDERS)}")


def _square_split(dim: int) -> tuple[int, int]:
    r = int(round(math.sqrt(dim)))
    if r * r != dim:
        raise UsageError(f"cannot split dimension {dim} into two equal factors; give local(dA,dB)")
    return r, r


def build_rdm(text: str, dim: int):
    if _is_file(text):
        return channel_from_json(json.loads(Path(text).read_text()))
    name, vals = _call(text)
    if name == "dephasing" and not vals:
        return twirl.dephasing_channel(dim)
    if name == "depolarizing" and not vals:
        return twirl.depolarizing_channel(dim)
    if name == "local":
        dims = tuple(_ints(vals, 2, name)) if vals else _square_split(dim)
        return twirl.local_unital_twirl(dims)
    if name == "permutation":
        return twirl.permutation_twirl(*_ints(vals, 2, name))
    if name == "collective":
        return schurweyl.collective_twirl(*_ints(vals, 2, name))
    raise UsageError(f"unknown map {text!r}; valid builders: {', '.join(RDM_BUILDERS)}")


_SIGMA_ALIASES = {
    "dephased": "dephasing",
    "depolarized": "depolarizing",
    "local-twirled": "local",
    "permutation-twirled": "permutation",
    "collective-twirled": "collective",
}


def build_sigma(text: str, rho: np.ndarray, args) -> np.ndarray:
    if not _is_file(text):
        name, _ = _call(text)
        if name in _SIGMA_ALIASES:
            ch = build_rdm(_SIGMA_ALIASES[name] + text[len(name):], rho.shape[0])
            return _fit(ch, rho)(rho)
    try:
        return build_state(text, args)
    except UsageError:
        raise UsageError(f"unknown sigma {text!r}; valid builders: {', '.join(SIGMA_BUILDERS)}") from None


def _fit(ch, rho):
    if ch.dim_in != rho.shape[0]:
        raise UsageError(f"map acts on dimension {ch.dim_in} but the state has dimension {rho.shape[0]}")
    return ch


def _load_rho(args) -> np.ndarray:
    rho = build_state(args.rho, args)
    if args.copies > 1:
        rho = tensor_power(rho, args.copies)
    return rho


def _parse_list(text: str, kind=float) -> list:
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(kind(part))
    if not out:
        raise UsageError(f"empty list {text!r}")
    return out


def _emit(args, payload) -> None:
    text = payload if isinstance(payload, str) else json.dumps(payload, indent=2, default=_jsonable)
    if args.out:
        Path(args.out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x)}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_entropy(args) -> int:
    rho = _load_rho(args)
    sigma = build_sigma(args.sigma, rho, args)
    report: dict = {"dim": rho.shape[0], "eps": args.eps, "delta": args.delta}
    quantities = {
        "D": lambda: entropy.relative_entropy(rho, sigma),
        "V": lambda: entropy.relative_entropy_variance(rho, sigma),
        "D2": lambda: entropy.collision_relative_entropy(rho, sigma),
        "Ds": lambda: entropy.info_spectrum_relative_entropy(rho, sigma, args.delta),
        "DH": lambda: entropy.hypothesis_testing_relative_entropy(rho, sigma, args.eps),
    }
    notes = {}
    for key, fn in quantities.items():
        try:
            report[key] = float(fn())
        except RescodeError as exc:
            report[key] = None
            notes[key] = str(exc)
    if notes:
        report["undefined"] = notes
    _emit(args, report)
    return 0


def cmd_bound(args) -> int:
    rho = _load_rho(args)
    ch = _fit(build_rdm(args.rdm, rho.shape[0]), rho)
    ns = _parse_list(args.N, int)
    if args.format == "csv":
        _emit(args, bounds.rate_curve(rho, ch, args.eps, ns, args.delta).to_csv())
        return 0
    out: dict = {"eps": args.eps, "N": ns}
    deltas = _parse_list(args.delta_grid) if args.delta_grid else (
        [args.delta] if args.delta else bounds.default_delta_grid(args.eps))
    if isinstance(ch, twirl.TwirlChannel):
        out["report"] = bounds.sandwich_bounds(rho, ch, args.eps, deltas).to_dict()
    else:
        out["report"] = {"log2_upper": float(bounds.upper_bound_log_messages(rho, ch, args.eps))}
    out["rates"] = [dict(zip(("N", "first_order", "second_order"), (n, *bounds.asymptotic_rate(rho, ch, args.eps, n))))
                    for n in ns]
    if args.beta is not None:
        h = _hamiltonian(args)
        if args.copies > 1:
            h = sum(np.kron(np.kron(np.eye(h.shape[0] ** k), h), np.eye(h.shape[0] ** (args.copies - 1 - k)))
                    for k in range(args.copies))
        out["thermo_bound"] = [{"N": n, "bits": bounds.thermo_bound(rho, h, args.beta, args.eps, n)} for n in ns]
    _emit(args, out)
    return 0


def _group_for(ch, rho):
    group = getattr(ch, "group", None)
    if group is None:
        raise UsageError("this map has no finite unitary group to encode with")
    return group


def cmd_simulate(args) -> int:
    rho = _load_rho(args)
    ch = _fit(build_rdm(args.rdm, rho.shape[0]), rho)
    group = _group_for(ch, rho)
    if args.codebook:
        cb = codesim.Codebook(tuple(_parse_list(args.codebook, int)))
        states = codesim.encode(rho, group, cb)
        dec = codesim.build_pgm(states)
        _emit(args, {
            "M": cb.M,
            "codebook": list(cb.assignment),
            "success_direct": codesim.success_probability_direct(states, dec),
            "success_collision": codesim.success_probability_via_collision(rho, group, cb),
            "privacy_residual": codesim.check_privacy(rho, group, cb, ch),
        })
        return 0
    if args.find:
        rep = codesim.find_achievable_log_m(
            rho, group, args.eps, args.trials, args.seed, args.strategy,
            twirl=ch if isinstance(ch, twirl.TwirlChannel) else None, threads=args.threads)
        _emit(args, rep.to_dict())
        return 0
    ms = _parse_list(args.M, int)
    results = [codesim.monte_carlo_achievability(rho, group, m, args.trials, args.seed, args.strategy,
                                                 args.threads) for m in ms]
    if args.format == "csv":
        _emit(args, codesim.results_to_csv(results))
    elif len(results) == 1:
        _emit(args, results[0].to_json())
    else:
        _emit(args, json.dumps([json.loads(r.to_json()) for r in results], indent=2))
    return 0


def cmd_schurweyl(args) -> int:
    if args.action == "demo3qubit":
        _emit(args, schurweyl.demo_to_json(schurweyl.three_qubit_demo()))
        return 0
    _emit(args, schurweyl.schur_weyl_table(args.n, args.d).to_dict())
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be positive")
    return v


def _table_n(text: str) -> int:
    v = _positive_int(text)
    if v > 12:
        raise argparse.ArgumentTypeError("n must be at most 12")
    return v


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write output here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--threads", type=_positive_int, default=1)


def _state_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--rho", required=True, help="state builder: " + ", ".join(STATE_BUILDERS))
    p.add_argument("--copies", type=_positive_int, default=1, help="use rho^{⊗copies}")
    p.add_argument("--hamiltonian", help="JSON matrix for gibbs(beta) and thermo bounds (default diag(0,1))")
    p.add_argument("--eps", type=float, default=0.05)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rescode", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("entropy", help="D, V, D2, D_s and D_H for a state pair")
    _state_args(p)
    p.add_argument("--sigma", required=True, help="reference: " + ", ".join(SIGMA_BUILDERS))
    p.add_argument("--delta", type=float, default=0.01)
    _common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("bound", help="one-shot bounds and second-order rates")
    _state_args(p)
    p.add_argument("--rdm", required=True, help="map builder: " + ", ".join(RDM_BUILDERS))
    p.add_argument("--delta", type=float, default=None, help="single delta (default: a grid)")
    p.add_argument("--delta-grid", help="comma-separated deltas")
    p.add_argument("--N", default="1", help="copy numbers, e.g. 1,2,5 or 1:100")
    p.add_argument("--beta", type=float, default=None, help="also report the thermodynamic bound")
    _common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="random-codebook PGM simulation")
    _state_args(p)
    p.add_argument("--rdm", required=True, help="twirl whose group supplies the encodings")
    p.add_argument("--M", default="2", help="message counts, e.g. 4 or 1:8")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=codesim.STRATEGIES, default="random")
    p.add_argument("--codebook", help="fixed group indices, e.g. 0,1,2,3")
    p.add_argument("--find", action="store_true", help="search the largest M with mean error <= eps")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("schurweyl", help="Schur-Weyl tables and the three-qubit example")
    p.add_argument("action", choices=("demo3qubit", "table"))
    p.add_argument("--n", type=_table_n, default=3)
    p.add_argument("--d", type=_positive_int, default=2)
    _common(p)
    p.set_defaults(func=cmd_schurweyl)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rescode: error: {exc}", file=sys.stderr)
        return 2
    except RescodeError as exc:
        print(f"rescode: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, TypeError, IndexError, OSError) as exc:
        print(f"rescode: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
