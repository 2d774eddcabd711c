"""Command-line frontend.

Exit status: 0 for True / no fault / NoEffect, 1 for False / fault /
FullControl / Crash / GPS capture, 2 for Unknown and usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import __version__
from .bmc.check import DEFAULT_TIMEOUT, VerdictKind, check, encode, enumerate_paths
from .fuzz.campaign import DEFAULT_STUCK_WINDOW, Mode, campaign
from .fuzz.compare import compare_modes
from .fuzz.minimize import minimize
from .fuzz.protocol import load_spec, tello_spec
from .fuzz.storage import read_corpus, write_corpus, write_crashes
from .fuzz.testcase import TestCase
from .gps import DomainError, evaluate, load_scenario
from .hybrid import DEFAULT_FUZZ_BUDGET, HybridConfig, coverage_report, verify
from .minir import ParseError, load_program

EXIT_OK, EXIT_FOUND, EXIT_UNKNOWN = 0, 1, 2
VERDICT_EXIT = {VerdictKind.TRUE: EXIT_OK, VerdictKind.FALSE: EXIT_FOUND,
                VerdictKind.UNKNOWN: EXIT_UNKNOWN}
DEFAULT_OUT = "uavfuzz-out"

log = logging.getLogger("uavfuzz")


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _spec(arg: str | None):
    if arg is None or arg == "tello":
        return tello_spec()
    return load_spec(arg)


def _seeds(directory: str | None) -> list[TestCase]:
    if directory is None:
        return []
    if not Path(directory).is_dir():
        raise UsageError(f"seeds directory {directory!r} does not exist")
    return read_corpus(directory)


def _address(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _stamp(payload: dict, deterministic: bool) -> dict:
    if not deterministic:
        payload["generated_at"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return payload


# -- subcommands -------------------------------------------------------------------

def cmd_verify(a) -> int:
    program = load_program(a.program)
    cfg = HybridConfig(fuzz_budget=a.budget, stuck_window=a.stuck_window, k=a.k,
                       timeout=a.timeout, stop_on_crash=not a.keep_going, rng_seed=a.rng_seed,
                       mode=a.mode, spec=_spec(a.spec) if a.mode == "generational" else None,
                       bmc_time_limit=a.bmc_time_limit)
    report = verify(program, _seeds(a.seeds), cfg)
    out = Path(a.out)
    payload = {"command": "verify", "program": Path(a.program).name, "rng_seed": a.rng_seed,
               **report.to_dict(deterministic=a.deterministic)}
    _write(out / "report.json", _dump(_stamp(payload, a.deterministic)))
    cov = coverage_report(report)
    _write(out / "coverage.txt", cov.format())
    crashes = out / "crashes"
    crashes.mkdir(parents=True, exist_ok=True)
    for i, f in enumerate(report.findings):
        _write(crashes / f"crash-{i:03d}.json", _dump(f.to_dict()))
    if report.corpus is not None:
        write_corpus(out / "corpus", report.corpus.members)
    print(f"verdict: {report.verdict}")
    for f in report.findings:
        print(f"  {f.property} via {f.stage}: input {f.counterexample.inputs.hex() or '(empty)'}"
              f", minimized {f.minimized.hex() or '(empty)'}")
    print(cov.format(), end="")
    print(f"report: {out / 'report.json'}")
    return report.exit_code


def cmd_fuzz(a) -> int:
    program = load_program(a.program)
    spec = _spec(a.spec) if a.mode == "generational" else None
    res = campaign(program, _seeds(a.seeds), a.budget, a.mode, spec, jobs=a.jobs,
                   rng_seed=a.rng_seed, stuck_window=a.stuck_window,
                   stop_on_crash=a.stop_on_crash, stop_on_stuck=not a.no_stop_on_stuck)
    corpus = res.corpus
    records = [type(c)(c.testcase, c.outcome, c.tick, minimize(program, c.testcase))
               for c in corpus.crashes]
    out = Path(a.out)
    write_corpus(out / "corpus", corpus.members)
    write_crashes(out / "crashes", records)
    edges = corpus.edges
    missed = [str(e) for e in program.edges if e.id not in edges]
    lines = [f"edge coverage: {len(edges)}/{len(program.edges)}",
             f"paths explored: {len(corpus.paths)}", "missed edges:" if missed else "missed edges: none"]
    lines += [f"  {m}" for m in missed]
    _write(out / "coverage.txt", "\n".join(lines) + "\n")
    payload = {"command": "fuzz", "program": Path(a.program).name, "mode": a.mode,
               "rng_seed": a.rng_seed, "budget": a.budget, "jobs": a.jobs,
               "stopped_on": res.stopped_on, "corpus": corpus.summary(),
               "stuck": res.stuck.to_dict(), "crashes": [r.to_dict() for r in records]}
    _write(out / "report.json", _dump(_stamp(payload, a.deterministic)))
    print(f"executions: {corpus.executions}, paths: {len(corpus.paths)}, "
          f"edges: {len(edges)}/{len(program.edges)}, stopped on {res.stopped_on}")
    if res.stuck.stuck:
        complex_ = ", ".join(f"site {f.site} ({f.guard_bits} bits)" for f in res.stuck.complex_guards)
        print(f"stuck after {res.stuck.since_new_edge} executions without new coverage"
              + (f"; complex guards: {complex_}" if complex_ else ""))
    for r in records:
        print(f"crash: {r.property} input {r.testcase.data.hex()}")
    return EXIT_FOUND if records else EXIT_OK


def cmd_bmc(a) -> int:
    program = load_program(a.program)
    v = check(program, a.k, timeout=a.timeout, total_timeout=a.bmc_time_limit)
    print(v)
    if v.counterexample is not None:
        print(f"  input {v.counterexample.inputs.hex() or '(empty)'}, depth {v.counterexample.depth}")
    if a.out:
        payload = {"command": "bmc", "program": Path(a.program).name, **v.to_dict(),
                   "summary": str(v)}
        _write(Path(a.out) / "report.json", _dump(_stamp(payload, a.deterministic)))
    if a.dimacs:
        _export_dimacs(program, v.k, Path(a.dimacs), a.dimacs_limit)
    return VERDICT_EXIT[v.kind]


def _export_dimacs(program, k: int, directory: Path, limit: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    n = 0
    for i, path in enumerate(enumerate_paths(program, k)):
        for prop in program.properties:
            try:
                vc = encode(program, path, prop, k)
            except ValueError:
                continue  # property not on this path
            formula, _ = vc.to_cnf()
            name = f"path{i:03d}-{prop.kind.value}-{prop.location.func}-B{prop.location.block}" \
                   f"-{prop.location.index}.cnf"
            (directory / name).write_text(formula.to_dimacs(), encoding="utf-8")
            n += 1
            if n >= limit:
                return


def _endpoint_config(a, **extra):
    from .net import EndpointConfig
    fields = {"command_port": a.command_port, "state_port": a.state_port,
              "interval": a.interval, "buffer_size": a.buffer_size, **extra}
    return EndpointConfig(**fields)


def cmd_serve(a) -> int:
    from .net import serve
    cfg = _endpoint_config(a, host=a.host, unchecked_copy=a.unchecked_copy, no_auth=a.no_auth,
                           unbounded_queue=a.unbounded_queue)
    ep = serve(cfg)
    print(f"serving on {ep.config.host}:{ep.config.command_port} "
          f"(state {ep.config.state_port}, interval {ep.config.interval:g} s)", flush=True)
    try:
        if a.duration is None:
            while True:
                time.sleep(0.5)
        else:
            time.sleep(a.duration)
    except KeyboardInterrupt:
        pass
    finally:
        ep.stop()
    return EXIT_OK


def cmd_attack(a) -> int:
    from .net import attack_dos, attack_takeover
    cfg = _endpoint_config(a, host=a.target[0], command_port=a.target[1])
    if a.kind == "dos":
        out = attack_dos(a.target, cfg, flood=a.flood, probe_interval=a.probe_interval)
    else:
        out = attack_takeover(a.target, cfg)
    print(f"{a.kind}: {out.classification.value}")
    for line in out.evidence:
        print(f"  {line}")
    if a.out:
        payload = {"command": f"attack {a.kind}", "target": f"{a.target[0]}:{a.target[1]}",
                   **out.to_dict()}
        _write(Path(a.out) / "report.json", _dump(_stamp(payload, a.deterministic)))
    return out.exit_code


def cmd_gps(a) -> int:
    scenario = load_scenario(a.scenario)
    res = evaluate(scenario)
    print(res.format(), end="")
    if a.out:
        payload = {"command": "gps", "scenario": scenario.to_dict(), "result": res.to_dict()}
        _write(Path(a.out) / "report.json", _dump(_stamp(payload, a.deterministic)))
    return EXIT_FOUND if res.captured else EXIT_OK


def cmd_compare(a) -> int:
    program = load_program(a.program)
    seed = None if a.seed_message is None else a.seed_message.encode()
    rep = compare_modes(program, _spec(a.spec), a.budget, a.rng_seed,
                        target=Path(a.program).stem, seed_message=seed)
    print(rep.format_table().rstrip("\n"))
    if a.out:
        _write(Path(a.out) / "report.json",
               _dump(_stamp({"command": "compare", **rep.to_dict()}, a.deterministic)))
        _write(Path(a.out) / "table.md", rep.format_table())
    return EXIT_OK


# -- parser ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = argparse.ArgumentParser(prog="uavfuzz", formatter_class=fmt,
                                description="Hybrid fuzzing and bounded model checking for "
                                            "drone command software.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def common(sp, out_default=None):
        sp.add_argument("--rng-seed", type=int, default=0, help="single seed for all randomness")
        sp.add_argument("--deterministic", action="store_true",
                        help="omit timestamps and timings from reports")
        sp.add_argument("--out", default=out_default, help="output directory")

    def fuzzing(sp):
        sp.add_argument("--budget", type=int, default=DEFAULT_FUZZ_BUDGET,
                        help="fuzz executions")
        sp.add_argument("--stuck-window", type=int, default=DEFAULT_STUCK_WINDOW,
                        help="executions without new coverage that count as stuck")
        sp.add_argument("--mode", choices=[Mode.MUTATIONAL.value, Mode.GENERATIONAL.value],
                        default=Mode.MUTATIONAL.value)
        sp.add_argument("--spec", help="protocol spec JSON for generational mode "
                                       "(default: built-in tello)")
        sp.add_argument("--seeds", help="directory of seed test cases")
        sp.add_argument("--jobs", type=int, default=1, help="parallel fuzz workers")

    def solving(sp):
        sp.add_argument("--k", type=int, default=None,
                        help="unwinding bound (default: completeness threshold, else 10)")
        sp.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                        help="seconds per solver query")
        sp.add_argument("--bmc-time-limit", type=float, default=None,
                        help="wall-clock seconds for all BMC work")

    sp = sub.add_parser("verify", help="fuzz, then model check the rest", formatter_class=fmt)
    sp.add_argument("program")
    fuzzing(sp)
    solving(sp)
    sp.add_argument("--keep-going", action="store_true",
                    help="collect further faults instead of stopping at the first")
    common(sp, DEFAULT_OUT)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("fuzz", help="run a fuzz campaign", formatter_class=fmt)
    sp.add_argument("program")
    fuzzing(sp)
    sp.add_argument("--stop-on-crash", action="store_true")
    sp.add_argument("--no-stop-on-stuck", action="store_true")
    common(sp, DEFAULT_OUT)
    sp.set_defaults(func=cmd_fuzz)

    sp = sub.add_parser("bmc", help="bounded model check a program", formatter_class=fmt)
    sp.add_argument("program")
    solving(sp)
    sp.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; BMC runs on one worker")
    sp.add_argument("--dimacs", help="directory to export per-path verification conditions")
    sp.add_argument("--dimacs-limit", type=int, default=100)
    common(sp)
    sp.set_defaults(func=cmd_bmc)

    def endpoint(sp):
        sp.add_argument("--command-port", type=int, default=8889)
        sp.add_argument("--state-port", type=int, default=8890)
        sp.add_argument("--interval", type=float, default=0.2, help="state broadcast period")
        sp.add_argument("--buffer-size", type=int, default=1024)

    sp = sub.add_parser("serve", help="run the simulated drone endpoint", formatter_class=fmt)
    endpoint(sp)
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--unchecked-copy", action="store_true")
    sp.add_argument("--no-auth", action="store_true")
    sp.add_argument("--unbounded-queue", action="store_true")
    sp.add_argument("--duration", type=float, default=None, help="seconds to serve, default forever")
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("attack", help="attack a running endpoint", formatter_class=fmt)
    sp.add_argument("kind", choices=["dos", "takeover"])
    sp.add_argument("target", type=_address, help="HOST:PORT of the command port")
    endpoint(sp)
    sp.add_argument("--flood", type=int, default=100_000, help="datagrams in the DoS flood")
    sp.add_argument("--probe-interval", type=float, default=1.0)
    common(sp)
    sp.set_defaults(func=cmd_attack)

    sp = sub.add_parser("gps", help="evaluate a GPS spoofing scenario", formatter_class=fmt)
    sp.add_argument("scenario")
    common(sp)
    sp.set_defaults(func=cmd_gps)

    sp = sub.add_parser("compare", help="mutational versus generational fuzzing",
                        formatter_class=fmt)
    sp.add_argument("program")
    sp.add_argument("spec", help="protocol spec JSON, or 'tello' for the built-in one")
    sp.add_argument("--budget", type=int, default=100_000, help="executions per approach")
    sp.add_argument("--seed-message", default="command",
                    help="the mutational fuzzer's single seed")
    common(sp)
    sp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:  # argparse reports usage errors with status 2
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(a, "budget", 1) < 0:
            raise UsageError("--budget must be non-negative")
        return a.func(a)
    except (UsageError, ParseError, DomainError, FileNotFoundError, ValueError, OSError) as e:
        print(f"uavfuzz: error: {e}", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
