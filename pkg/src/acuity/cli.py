"""Command-line front door.

Batch study subcommands (benchmark, sweeps, calibration, ablations) run the
simulation harness directly and write plot-ready CSV. `serve` starts the
live exam service; `exam` is a thin HTTP client that drives a session
against a running service from the terminal.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields, replace

import httpx

from . import simulate
from .belief import GumbelPrior, K0RatioPrior
from .simulate import SimConfig
from .units import arcmin_to_snellen_denominator

DEFAULT_SERVER = "http://127.0.0.1:8000"


def _load_config(path: str) -> dict:
    """Flat key-value JSON document mirroring SimConfig fields."""
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise SystemExit(f"config {path} must be a flat JSON object")
    return doc


def _sim_config(args) -> SimConfig:
    cfg = SimConfig()
    overrides: dict = {}
    if getattr(args, "config", None):
        doc = _load_config(args.config)
        simple = {f.name for f in fields(SimConfig)} - {"k0_ratio", "const_prior"}
        unknown = set(doc) - simple - {"k0_ratio_lo", "k0_ratio_hi"}
        if unknown:
            raise SystemExit(f"unknown config keys: {sorted(unknown)}")
        overrides.update({k: doc[k] for k in doc if k in simple})
        if "k0_ratio_lo" in doc or "k0_ratio_hi" in doc:
            ratio = K0RatioPrior(
                lo=doc.get("k0_ratio_lo", cfg.k0_ratio.lo),
                hi=doc.get("k0_ratio_hi", cfg.k0_ratio.hi),
            )
            overrides["k0_ratio"] = ratio
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if getattr(args, "patients", None) is not None:
        overrides["n_patients"] = args.patients
    return replace(cfg, **overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def cmd_benchmark(args) -> None:
    cfg = _sim_config(args)
    policies = args.policies.split(",") if args.policies else simulate.BENCHMARK_POLICIES
    rows = simulate.run_benchmark(cfg, policies, questions=args.questions)
    _emit(simulate.metrics_to_csv(rows), args.out)


def cmd_sweep_length(args) -> None:
    cfg = _sim_config(args)
    policies = args.policies.split(",") if args.policies else ("adaptive",)
    lengths = [int(x) for x in args.lengths.split(",")]
    points = simulate.run_length_sweep(cfg, policies, lengths)
    _emit(simulate.sweep_to_csv(points), args.out)


def cmd_calibration(args) -> None:
    cfg = _sim_config(args)
    bins = simulate.run_calibration(cfg, n_runs=args.runs, questions=args.questions)
    _emit(simulate.calibration_to_csv(bins), args.out)


def cmd_ablations(args) -> None:
    cfg = _sim_config(args)
    rows = simulate.run_ablations(cfg, questions=args.questions)
    _emit(simulate.metrics_to_csv(rows), args.out)


def cmd_sweep_slip(args) -> None:
    cfg = _sim_config(args)
    slips = [float(x) for x in args.slips.split(",")]
    _emit(simulate.sweep_to_csv(simulate.run_slip_sweep(cfg, slips)), args.out)


def cmd_sweep_optotypes(args) -> None:
    cfg = _sim_config(args)
    counts = [int(x) for x in args.counts.split(",")]
    _emit(simulate.sweep_to_csv(simulate.run_optotype_sweep(cfg, counts)), args.out)


def cmd_serve(args) -> None:
    import uvicorn

    from .service.app import create_app

    data_dir = args.data_dir or os.environ.get("ACUITY_DATA_DIR", "./acuity-sessions")
    bind = args.bind or os.environ.get("ACUITY_BIND", "127.0.0.1:8000")
    host, _, port = bind.partition(":")
    app = create_app(data_dir=data_dir)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000))


class ExamClient:
    """Thin HTTP client for one live exam session."""

    def __init__(self, base_url: str = DEFAULT_SERVER, client: httpx.Client | None = None):
        self.http = client or httpx.Client(base_url=base_url, timeout=30.0)

    def create(self, body: dict) -> dict:
        r = self.http.post("/sessions", json=body)
        r.raise_for_status()
        return r.json()

    def submit(self, session_id: str, step: int, chosen: str) -> dict:
        r = self.http.post(
            f"/sessions/{session_id}/responses", json={"step": step, "chosen": chosen}
        )
        r.raise_for_status()
        return r.json()

    def belief(self, session_id: str) -> dict:
        r = self.http.get(f"/sessions/{session_id}/belief")
        r.raise_for_status()
        return r.json()

    def result(self, session_id: str) -> dict:
        r = self.http.get(f"/sessions/{session_id}/result")
        r.raise_for_status()
        return r.json()


def run_exam_client(args, client: ExamClient, answer=None) -> dict:
    """Drive a session to completion; `answer(stimulus) -> chosen` supplies
    responses (defaults to interactive prompts)."""
    body: dict = {}
    if args.questions is not None:
        body["max_questions"] = args.questions
    if args.until_confident:
        body["mode"] = {"kind": "until_confident"}
    if args.prior_mu is not None or args.prior_beta is not None:
        body["prior"] = {
            "mu": args.prior_mu if args.prior_mu is not None else 0.3,
            "beta": args.prior_beta if args.prior_beta is not None else 0.5,
        }
    if getattr(args, "seed", None) is not None:
        body["seed"] = args.seed

    created = client.create(body)
    session_id = created["session_id"]
    stimulus = created["stimulus"]
    options = created["optotypes"]

    def interactive(stim):
        print(
            f"step {stim['step']}: letter size {stim['size_arcmin']:.3f} arcmin "
            f"(logMAR {stim['size_logmar']:+.3f}) shows {stim['optotype']!r}"
        )
        while True:
            got = input(f"your answer {options}: ").strip()
            if got in options:
                return got
            print(f"answer must be one of {options}")

    answer = answer or interactive
    while stimulus is not None:
        reply = client.submit(session_id, stimulus["step"], answer(stimulus))
        stimulus = reply.get("stimulus")
        if reply["status"] == "finished":
            result = reply["result"]
            den = arcmin_to_snellen_denominator(result["predicted_arcmin"])
            print(
                f"acuity {result['predicted_logmar']:+.3f} logMAR "
                f"(20/{den:.0f}), confidence {result['confidence']:.2f} "
                f"after {result['questions_asked']} letters"
            )
            return result
    return client.result(session_id)


def cmd_exam(args) -> None:
    client = ExamClient(base_url=args.server)
    if args.auto:
        import random

        rng = random.Random(args.seed or 0)

        def sloppy(stim):
            # demo responder: reads big letters, guesses small ones
            return stim["optotype"] if stim["size_arcmin"] > 2 else rng.choice(
                ["up", "down", "left", "right"]
            )

        run_exam_client(args, client, answer=sloppy)
    else:
        run_exam_client(args, client)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acuity", description="Adaptive visual-acuity exams and studies"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def study(name, fn, **extra_args):
        p = sub.add_parser(name)
        p.add_argument("--seed", type=int, default=None, help="master seed")
        p.add_argument("--patients", type=int, default=None)
        p.add_argument("--questions", type=int, default=20)
        p.add_argument("--out", default=None, help="CSV output path (default stdout)")
        p.add_argument("--config", default=None, help="flat JSON config file")
        for flag, kw in extra_args.items():
            p.add_argument(flag, **kw)
        p.set_defaults(fn=fn)
        return p

    study("benchmark", cmd_benchmark, **{"--policies": dict(default=None)})
    study(
        "sweep-length",
        cmd_sweep_length,
        **{"--policies": dict(default=None), "--lengths": dict(default="5,20,50,200")},
    )
    study("calibration", cmd_calibration, **{"--runs": dict(type=int, default=10000)})
    study("ablations", cmd_ablations)
    study("sweep-slip", cmd_sweep_slip, **{"--slips": dict(default="0.0,0.05,0.2,0.4")})
    study("sweep-optotypes", cmd_sweep_optotypes, **{"--counts": dict(default="2,4,19")})

    serve = sub.add_parser("serve", help="run the live exam service")
    serve.add_argument("--data-dir", default=None, help="session log directory")
    serve.add_argument("--bind", default=None, help="host:port")
    serve.set_defaults(fn=cmd_serve)

    exam = sub.add_parser("exam", help="take an exam against a running service")
    exam.add_argument("--server", default=DEFAULT_SERVER)
    exam.add_argument("--questions", type=int, default=None)
    exam.add_argument("--until-confident", action="store_true")
    exam.add_argument("--prior-mu", type=float, default=None)
    exam.add_argument("--prior-beta", type=float, default=None)
    exam.add_argument("--seed", type=int, default=None)
    exam.add_argument("--auto", action="store_true", help="demo responder")
    exam.set_defaults(fn=cmd_exam)

    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.fn(args)


if __name__ == "__main__":
    main()
