"""Command-line surface.

Subcommands:

    run                   full protocol run, JSON report on stdout
    verify-table1         check all sixteen correction-table rows
    verify-states         check branch and family conditionals vs literals
    analyze-entanglement  per-branch Schmidt structure (alias:
                          verify-entanglement)
    sweep-noise           depolarization sweep with and without recovery
    parse                 validate a circuit file, print canonical text
    dump                  branch conditional states as JSON

Exit codes: 0 all checks pass, 1 a verification failed, 2 usage or
circuit-parse errors.  JSON output is byte-deterministic for fixed
inputs and seed: keys are sorted and floats use their shortest
round-trip form.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .dsl import ParseError, elaborate, parse
from .network import CircuitNetwork
from .noise import (
    PSI_PLUS,
    apply_errors,
    classify_family,
    depolarizing_mixture,
    family_state,
    format_noise_spec,
)
from .pipeline import (
    RunReport,
    branch_states,
    entanglement_report,
    run_full,
    verify_correction_table,
    verify_reference_states,
)
from .source import CaseWeights
from .states import fidelity, phase_fixed, to_json_terms

BUILTINS = ("fig1", "fig3")

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


@dataclass(frozen=True)
class CommandSpec:
    """A parsed invocation: the subcommand plus its typed flag values."""

    command: str
    flags: dict


class _UsageError(Exception):
    pass


def _load_builtin(name: str) -> CircuitNetwork:
    text = (resources.files("ghzgen") / "fixtures" / f"{name}.onet").read_text(
        encoding="utf-8"
    )
    return elaborate(parse(text), name=name)


def _load_network(flags: dict, default_builtin: str) -> CircuitNetwork:
    path = flags.get("network")
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise _UsageError(f"cannot read network file: {exc}") from exc
        return elaborate(parse(text), name=Path(path).stem)
    return _load_builtin(flags.get("builtin") or default_builtin)


def _parse_weights(text: str | None) -> CaseWeights | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 3:
        raise _UsageError("weights need three comma-separated numbers")
    try:
        values = tuple(float(p) for p in parts)
    except ValueError as exc:
        raise _UsageError(f"bad weights: {exc}") from exc
    try:
        return CaseWeights(*values)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _split_noise(spec: str | None) -> tuple[str | None, float | None]:
    """A noise flag is either an explicit error list or ``p=VALUE``."""
    if spec is None:
        return None, None
    if spec.startswith("p="):
        try:
            p = float(spec[2:])
        except ValueError as exc:
            raise _UsageError(f"bad depolarization strength: {spec!r}") from exc
        return None, p
    return spec, None


def _dump_json(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def _entry_json(entry) -> dict:
    family = entry.family
    if family is not None and not isinstance(family, str):
        family = family.label
    out = {
        "branch": entry.branch,
        "family": family,
        "pattern": entry.pattern.label if entry.pattern else None,
        "shape": "".join(entry.pattern.shape) if entry.pattern else None,
        "branch_probability": entry.branch_probability,
        "coincidence_probability": entry.coincidence_probability,
        "pattern_probability": entry.pattern_probability,
        "joint_probability": entry.joint_probability,
        "corrections": list(entry.corrections),
        "fidelity": entry.fidelity,
        "state": to_json_terms(entry.state),
    }
    if entry.entanglement is not None:
        ent = dict(entry.entanglement)
        ent["schmidt_coefficients"] = list(ent["schmidt_coefficients"])
        out["entanglement"] = ent
    return out


def _report_json(report: RunReport) -> dict:
    return {
        "network": report.network,
        "style": report.style,
        "theta": report.settings.theta,
        "alpha": report.settings.alpha,
        "weights": list(report.weights),
        "noise": format_noise_spec(report.noise) if report.noise else None,
        "probe_overlap": report.probe_overlap,
        "sampled": report.sampled,
        "entries": [_entry_json(e) for e in report.entries],
    }


def cmd_run(spec: CommandSpec) -> int:
    flags = spec.flags
    network = _load_network(flags, default_builtin="fig3")
    noise, p = _split_noise(flags.get("noise"))
    if p is not None:
        raise _UsageError(
            "a depolarization strength (p=...) only applies to sweep-noise; "
            "give run an explicit error list like X@1,Z@3"
        )
    report = run_full(
        noise,
        network=network,
        weights=_parse_weights(flags.get("weights")),
        theta=flags.get("theta"),
        alpha=flags.get("alpha"),
        sample=bool(flags.get("sample")),
        seed=flags.get("seed") or 0,
    )
    print(_dump_json(_report_json(report)))
    return EXIT_OK


def cmd_verify(spec: CommandSpec) -> int:
    kind = {"verify-table1": "table1", "verify-states": "states"}.get(
        spec.command, "entanglement"
    )
    if kind == "table1":
        rows = verify_correction_table()
        passed = sum(r["passed"] for r in rows)
        if spec.flags.get("json"):
            print(_dump_json({"rows": rows, "passed": passed == len(rows)}))
        else:
            worst = min(r["fidelity"] for r in rows)
            if passed == len(rows):
                print(f"{passed}/{len(rows)} rows: corrected fidelity {worst:.12f}")
            else:
                first = next(r for r in rows if not r["passed"])
                print(
                    f"{passed}/{len(rows)} rows passed; first failure: "
                    f"family {first['family']} pattern {first['pattern']} "
                    f"fidelity {first['fidelity']:.12f}"
                )
        return EXIT_OK if passed == len(rows) else EXIT_CHECK_FAILED

    if kind == "states":
        checks = verify_reference_states()
        ok = all(c["passed"] for c in checks)
        if spec.flags.get("json"):
            print(_dump_json({"checks": checks, "passed": ok}))
        else:
            for c in checks:
                status = "pass" if c["passed"] else "FAIL"
                detail = f" ({c['detail']})" if c["detail"] else ""
                print(f"{c['name']}: fidelity {c['fidelity']:.12f}{detail}: {status}")
        return EXIT_OK if ok else EXIT_CHECK_FAILED

    network = _load_network(spec.flags, default_builtin="fig1")
    weights = _parse_weights(spec.flags.get("weights"))
    branches = entanglement_report(network, weights=weights)
    ranks = {}
    rows = []
    for branch, joint, summary in branches:
        ranks[branch] = summary["schmidt_rank"]
        rows.append(
            {
                "branch": branch,
                "joint_probability": joint,
                "schmidt_rank": summary["schmidt_rank"],
                "schmidt_coefficients": list(summary["schmidt_coefficients"]),
                "polarization_purity": summary["polarization_purity"],
                "product_state_deviation": summary["product_state_deviation"],
            }
        )
    ok = ranks.get("A") == 1 and ranks.get("B") == 2
    if spec.flags.get("json"):
        print(_dump_json({"branches": rows, "passed": ok}))
    else:
        for row in rows:
            coeffs = ", ".join(f"{c:.6f}" for c in row["schmidt_coefficients"])
            print(
                f"branch {row['branch']}: Schmidt rank {row['schmidt_rank']} "
                f"({coeffs}), polarization purity {row['polarization_purity']:.6f}, "
                f"product-state deviation {row['product_state_deviation']:.2e}"
            )
        print("pol-vs-spatial split: " + ("pass" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_sweep(spec: CommandSpec) -> int:
    flags = spec.flags
    noise, p = _split_noise(flags.get("noise"))
    if noise is not None:
        raise _UsageError("sweep-noise needs a strength spec like p=0.1")
    if p is None:
        p = 0.1
    network = _load_network(flags, default_builtin="fig3")
    weights = _parse_weights(flags.get("weights"))
    theta = flags.get("theta")
    alpha = flags.get("alpha")
    terms = depolarizing_mixture(p)
    target = family_state(PSI_PLUS)

    def one(term):
        weight, errors = term
        report = run_full(
            errors, network=network, weights=weights, theta=theta, alpha=alpha
        )
        channel = [e for e in report.entries if e.branch == "B"]
        prob = sum(e.pattern_probability for e in channel)
        corrected = sum(e.pattern_probability * e.fidelity for e in channel) / prob
        noisy = apply_errors(target, errors)
        return {
            "errors": format_noise_spec(errors),
            "weight": weight,
            "family": classify_family(noisy).label,
            "corrected_fidelity": corrected,
            "uncorrected_fidelity": fidelity(noisy, target),
        }

    # independent exact runs; output order follows the mixture order
    with ThreadPoolExecutor() as executor:
        rows = list(executor.map(one, terms))

    corrected_mean = sum(r["weight"] * r["corrected_fidelity"] for r in rows)
    uncorrected_mean = sum(r["weight"] * r["uncorrected_fidelity"] for r in rows)
    ok = all(r["corrected_fidelity"] >= 1.0 - 1e-12 for r in rows)
    payload = {
        "p": p,
        "terms": rows,
        "corrected_mean_fidelity": corrected_mean,
        "uncorrected_mean_fidelity": uncorrected_mean,
        "passed": ok,
    }
    if flags.get("json"):
        print(_dump_json(payload))
    else:
        print(f"depolarization p={p}: {len(rows)} channel error terms")
        print(f"corrected mean fidelity   {corrected_mean:.12f}")
        print(f"uncorrected mean fidelity {uncorrected_mean:.12f}")
        if not ok:
            first = next(r for r in rows if r["corrected_fidelity"] < 1.0 - 1e-12)
            print(
                f"FAIL: errors {first['errors'] or '(none)'} recovered only "
                f"{first['corrected_fidelity']:.12f}"
            )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_parse(spec: CommandSpec) -> int:
    from .dsl import pretty_print

    flags = spec.flags
    if not flags.get("network") and not flags.get("builtin"):
        raise _UsageError("parse needs --network FILE or --builtin NAME")
    if flags.get("network"):
        path = Path(flags["network"])
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise _UsageError(f"cannot read network file: {exc}") from exc
        name = path.stem
    else:
        name = flags["builtin"]
        text = (resources.files("ghzgen") / "fixtures" / f"{name}.onet").read_text(
            encoding="utf-8"
        )
    document = parse(text)
    network = elaborate(document, name=name)
    if flags.get("json"):
        payload = {
            "name": network.name,
            "statements": len(document.statements),
            "elements": len(network.elements),
            "couplings": len(network.couplings),
            "detectors": {d.name: list(d.modes) for d in network.detectors},
            "source": network.source.kind if network.source else None,
        }
        print(_dump_json(payload))
    else:
        sys.stdout.write(pretty_print(document))
    return EXIT_OK


def cmd_dump(spec: CommandSpec) -> int:
    flags = spec.flags
    network = _load_network(flags, default_builtin="fig1")
    weights = _parse_weights(flags.get("weights"))
    if weights is not None or flags.get("theta") or flags.get("alpha"):
        from .pipeline import _with_overrides

        network = _with_overrides(
            network, weights=weights, theta=flags.get("theta"), alpha=flags.get("alpha")
        )
    rows = []
    for bs in branch_states(network):
        rows.append(
            {
                "branch": bs.branch,
                "branch_probability": bs.outcome.probability,
                "coincidence_probability": bs.coincidence_probability,
                "joint_probability": bs.joint_probability,
                "x": bs.outcome.x,
                "phi": bs.outcome.phi,
                "state": to_json_terms(phase_fixed(bs.conditional)),
            }
        )
    print(_dump_json({"network": network.name, "branches": rows}))
    return EXIT_OK


_HANDLERS = {
    "run": cmd_run,
    "verify-table1": cmd_verify,
    "verify-states": cmd_verify,
    "analyze-entanglement": cmd_verify,
    "sweep-noise": cmd_sweep,
    "parse": cmd_parse,
    "dump": cmd_dump,
}


def _add_network_flags(sub, default_builtin: str):
    group = sub.add_mutually_exclusive_group()
    group.add_argument(
        "--builtin",
        choices=BUILTINS,
        help=f"packaged circuit (default {default_builtin})",
    )
    group.add_argument("--network", metavar="FILE", help="circuit description file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ghzgen",
        description="Exact simulator for a heralded three-photon GHZ generator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="full protocol run (JSON report)")
    _add_network_flags(run, "fig3")
    run.add_argument("--noise", metavar="SPEC", help="channel errors, e.g. X@1,Z@3")
    run.add_argument("--weights", metavar="W1,W2,W3", help="source case weights")
    run.add_argument("--theta", type=float, help="probe cross-phase per unit")
    run.add_argument("--alpha", type=float, help="probe amplitude")
    run.add_argument("--sample", action="store_true", help="draw one outcome")
    run.add_argument("--seed", type=int, default=0, help="sampling seed")

    sub.add_parser("verify-table1", help="check the sixteen correction rows").add_argument(
        "--json", action="store_true"
    )
    sub.add_parser("verify-states", help="check conditionals vs literals").add_argument(
        "--json", action="store_true"
    )

    ent = sub.add_parser(
        "analyze-entanglement",
        aliases=["verify-entanglement"],
        help="per-branch Schmidt structure across polarization vs path",
    )
    _add_network_flags(ent, "fig1")
    ent.add_argument("--weights", metavar="W1,W2,W3")
    ent.add_argument("--json", action="store_true")

    sweep = sub.add_parser("sweep-noise", help="depolarization recovery sweep")
    _add_network_flags(sweep, "fig3")
    sweep.add_argument("--noise", metavar="p=P", help="strength (default p=0.1)")
    sweep.add_argument("--weights", metavar="W1,W2,W3")
    sweep.add_argument("--theta", type=float)
    sweep.add_argument("--alpha", type=float)
    sweep.add_argument("--json", action="store_true")

    par = sub.add_parser("parse", help="validate a circuit file")
    _add_network_flags(par, "fig3")
    par.add_argument("--json", action="store_true")

    dump = sub.add_parser("dump", help="branch conditional states as JSON")
    _add_network_flags(dump, "fig1")
    dump.add_argument("--weights", metavar="W1,W2,W3")
    dump.add_argument("--theta", type=float)
    dump.add_argument("--alpha", type=float)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    namespace = parser.parse_args(argv)
    flags = vars(namespace).copy()
    command = flags.pop("command")
    # canonical command name even when invoked through an alias
    if command == "verify-entanglement":
        command = "analyze-entanglement"
    spec = CommandSpec(command=command, flags=flags)
    try:
        return _HANDLERS[command](spec)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
