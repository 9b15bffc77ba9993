"""Command line entry point.

Exit codes: 0 clean run, 2 collision detected, 3 fault (bad arguments,
scenario load failure, or a simulation fault mid-run).
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .runner import EXIT_FAULT, RunConfig, run
from .scenario_io import ScenarioError


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; 2 means collision here."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAULT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(
        prog="localplan",
        description=(
            "Run a driving scenario with local-frame trajectory planning "
            "under motion-sensor error, logging one JSON record per frame."
        ),
    )
    p.add_argument("--scenario", metavar="PATH", help="scenario YAML file")
    p.add_argument("--seed", type=int, default=0, metavar="N",
                   help="RNG seed (default 0)")
    p.add_argument("--v-offset", type=float, default=None, metavar="MPS",
                   help="override speed measurement offset [m/s]")
    p.add_argument("--sigma-v", type=float, default=None, metavar="MPS",
                   help="override speed measurement noise sd [m/s]")
    p.add_argument("--yawrate-offset-dps", type=float, default=None,
                   metavar="DPS", help="override yaw-rate offset [deg/s]")
    p.add_argument("--sigma-yawrate-dps", type=float, default=None,
                   metavar="DPS", help="override yaw-rate noise sd [deg/s]")
    p.add_argument("--duration", type=float, default=None, metavar="S",
                   help="override run duration [s]")
    p.add_argument("--replan-hz", type=float, default=10.0, metavar="HZ",
                   help="replanning rate (default 10)")
    p.add_argument("--horizon", type=float, default=None, metavar="S",
                   help="override planning horizon [s]")
    p.add_argument("--out", default="runs", metavar="DIR",
                   help="output directory for logs (default ./runs)")
    p.add_argument("--log-name", default=None, metavar="NAME",
                   help="log file name (default <scenario>_seed<N>.jsonl)")
    p.add_argument("--fan-every", type=int, default=5, metavar="K",
                   help="log the full candidate fan every K frames (default 5)")
    p.add_argument("--toy-orbit", action="store_true",
                   help="run the synthetic stability-monitor orbit instead "
                        "of a driving scene")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if not args.toy_orbit and args.scenario is None:
        print("localplan: error: --scenario is required unless --toy-orbit "
              "is given", file=sys.stderr)
        return EXIT_FAULT
    try:
        config = RunConfig(
            scenario_path=args.scenario,
            seed=args.seed,
            v_offset=args.v_offset,
            sigma_v=args.sigma_v,
            yawrate_offset_dps=args.yawrate_offset_dps,
            sigma_yawrate_dps=args.sigma_yawrate_dps,
            duration=args.duration,
            replan_hz=args.replan_hz,
            horizon=args.horizon,
            output_dir=args.out,
            toy_orbit=args.toy_orbit,
            fan_every=args.fan_every,
            log_name=args.log_name,
        )
        result = run(config)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"localplan: error: {exc}", file=sys.stderr)
        return EXIT_FAULT

    s = result.summary
    if s.get("kind") == "toy-orbit":
        st = s["stability"]
        print(f"toy orbit: {s['steps']} steps, final |x| = {s['final_norm']:.3g}, "
              f"contained = {st['contained']} "
              f"(radius {st['containment_radius']:.3g}, entry {st['entry_step']})")
    else:
        status = {0: "clean", 2: "collision", 3: "fault"}.get(
            result.exit_status, str(result.exit_status))
        line = (f"{s['frames']} frames, exit {result.exit_status} ({status})")
        if s.get("collision_t") is not None:
            line += f", collision at t={s['collision_t']:.1f}s"
        if s.get("fault"):
            line += f", fault: {s['fault']}"
        if s["final"].get("stop_deviation_m") is not None:
            line += f", stop deviation {s['final']['stop_deviation_m']:.3f} m"
        print(line)
    print(f"log: {result.log_path}")
    return result.exit_status


if __name__ == "__main__":
    sys.exit(main())
