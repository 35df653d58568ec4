"""sb_loader: the text-only benchmark interface.

Algorithm libraries are loaded first so their declared parameters become
real CLI options (--<algo>-<parameter>); --help therefore lists every
tunable of the loaded libraries.
"""

from __future__ import annotations

import argparse
import sys

from slamkit.api import ApiError, ParamType, load_algorithm
from slamkit.plugins import resolve_library
from slamkit.runner.benchmark import AlgorithmRun, RunSpec, run_benchmark


def _prescan(argv: list[str]) -> list[str]:
    """Collect -load arguments before real parsing so options can be built."""
    libraries = []
    i = 0
    while i < len(argv):
        if argv[i] == "-load" and i + 1 < len(argv):
            libraries.append(argv[i + 1])
            i += 2
        else:
            i += 1
    return libraries


def build_parser(libraries: list[str]) -> tuple[argparse.ArgumentParser, dict[str, dict[str, str]]]:
    parser = argparse.ArgumentParser(
        prog="sb_loader",
        description="Run loaded SLAM algorithm libraries over a datafile and "
        "print per-frame metrics.",
    )
    parser.add_argument("-i", dest="datafile", required=True, help="input .slam datafile")
    parser.add_argument(
        "-load", dest="libraries", action="append", default=[], required=True,
        help="algorithm library to load (repeatable)",
    )
    parser.add_argument("--frame-limit", type=int, default=None)
    parser.add_argument("--max-dt", type=float, default=0.02,
                        help="association gate in seconds (default 0.02)")
    parser.add_argument("--memory-probe", choices=["alloc", "rss", "none"], default="alloc")
    parser.add_argument("--power-trace", default=None, help="watt trace file to replay")
    parser.add_argument("-o", dest="output", default=None, help="report output path")
    parser.add_argument("--format", choices=["json", "csv"], default="json")
    parser.add_argument("--serve", default=None, metavar="ADDR",
                        help="host:port; start the run-control service instead of batch mode")
    parser.add_argument("--deliver-gt-frames", action="store_true",
                        help="test mode: forward ground-truth frames to plugins")
    parser.add_argument("--ui-enabled", action="store_true",
                        help="let plugins allocate visualization-only outputs")
    parser.add_argument("--rer", action="store_true", dest="compute_rer",
                        help="compute the reconstruction error (offline, slow)")
    parser.add_argument("--rpe-delta", type=int, default=1)
    parser.add_argument("--seed", type=int, default=0)

    # one option group per loaded library, built from its declared parameters
    option_map: dict[str, dict[str, str]] = {}
    seen = set()
    for library in libraries:
        handle = load_algorithm(resolve_library(library))
        if handle.name in seen:
            parser.error(f"algorithm short name collision: {handle.name!r}")
        seen.add(handle.name)
        handle.configure()
        group = parser.add_argument_group(f"{handle.name} parameters")
        option_map[handle.name] = {}
        for spec in handle.config.parameters.values():
            flag = f"--{handle.name}-{spec.long_name}"
            dest = f"param_{handle.name}_{spec.long_name}".replace("-", "_")
            kwargs = {"dest": dest, "help": spec.description, "default": None}
            if spec.value_type == ParamType.INT:
                kwargs["type"] = int
            elif spec.value_type == ParamType.REAL:
                kwargs["type"] = float
            group.add_argument(flag, **kwargs)
            option_map[handle.name][spec.long_name] = dest
        # the scratch handle served declaration only; the run loads afresh
    return parser, option_map


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        parser, option_map = build_parser(_prescan(argv))
    except (ApiError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)

    algorithms = []
    for library in args.libraries:
        try:
            name = load_algorithm(resolve_library(library)).name
        except (ApiError, FileNotFoundError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        overrides = {}
        for long_name, dest in option_map.get(name, {}).items():
            value = getattr(args, dest, None)
            if value is not None:
                overrides[long_name] = value
        algorithms.append(AlgorithmRun(library=library, parameters=overrides))

    spec = RunSpec(
        datafile=args.datafile,
        algorithms=algorithms,
        frame_limit=args.frame_limit,
        max_dt=args.max_dt,
        memory_probe=args.memory_probe,
        power_trace=args.power_trace,
        deliver_gt_frames=args.deliver_gt_frames,
        ui_enabled=args.ui_enabled,
        compute_rer=args.compute_rer,
        rpe_delta=args.rpe_delta,
        seed=args.seed,
        output_path=args.output,
        output_format=args.format,
    )

    if args.serve:
        from slamkit.runner.service import serve_blocking

        host, _, port = args.serve.partition(":")
        serve_blocking(spec, host or "127.0.0.1", int(port or 8000))
        return 0

    try:
        spec.validate()
        reports = run_benchmark(spec)
    except (FileNotFoundError, ValueError, ApiError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    failed = [r for r in reports if r.failure is not None]
    for report in failed:
        print(f"run failed for {report.algorithm}: {report.failure}", file=sys.stderr)
    return 1 if len(failed) == len(reports) else 0


if __name__ == "__main__":
    raise SystemExit(main())
