"""Command-line interface: ``uslkit {fit,predict,bound,simulate,verify}``.

Exit codes: 0 success, 1 usage or parse error, 2 domain, fit or simulation
failure (including failed verification or a simulation outside tolerance).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, fitting, queueing, verify
from .fitting import FitError
from .models import DomainError, ModelParams, NoFiniteMaximum, usl_capacity, usl_pstar
from .queueing import QueueParams
from .report import ParseError, ReportDocument, curve_csv, read_samples
from .simulator import MODES, ConfigError, Dist, SimConfig, SimulationError, run_sim

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2

log = logging.getLogger("uslkit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def parse_p_range(text: str) -> list[int]:
    """``8``, ``1:64``, ``1:64:4`` or ``1,2,4,8``."""
    try:
        if "," in text:
            values = [int(v) for v in text.split(",")]
        elif ":" in text:
            parts = [int(v) for v in text.split(":")]
            if len(parts) not in (2, 3):
                raise ValueError
            step = parts[2] if len(parts) == 3 else 1
            if step < 1:
                raise ValueError
            values = list(range(parts[0], parts[1] + 1, step))
        else:
            values = [int(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad p range {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"p range {text!r} must contain integers >= 1")
    return values


def _dist(text: str) -> Dist:
    try:
        return Dist.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _emit(args, doc: ReportDocument, text: str, curve_rows=None, header=None) -> None:
    if args.output:
        Path(args.output).write_text(doc.to_json() + "\n")
    if getattr(args, "curve_out", None) and curve_rows is not None:
        Path(args.curve_out).write_text(curve_csv(curve_rows, header) if header else curve_csv(curve_rows))
    if args.json:
        print(doc.to_json())
    else:
        print(text)


# -- fit ---------------------------------------------------------------------

def cmd_fit(args) -> int:
    samples, notices = read_samples(args.input)
    for note in notices:
        print(f"notice: {note}", file=sys.stderr)
    res = fitting.fit_samples(samples, args.model, args.baseline)
    result = {
        "sigma": res.sigma,
        "kappa": res.kappa,
        "x1_used": res.x1_used,
        "rss": res.rss,
        "r_squared": res.r_squared,
        "p_star": res.p_star,
        "p_star_int": res.p_star_int,
        "model": res.model,
        "model_choice": res.model_choice,
        "scores": {
            name: {"sigma": sc.params.sigma, "kappa": sc.params.kappa, "rss": sc.rss, "aicc": sc.aicc}
            for name, sc in res.scores.items()
        },
        "converged": res.converged,
        "warnings": list(res.warnings),
    }
    doc = ReportDocument(
        "fit",
        {"input": str(args.input), "model": args.model, "baseline": args.baseline,
         "samples": [[s.p, s.x] for s in samples]},
        result,
        notices=notices + list(res.warnings),
    )
    p_top = max(s.p for s in samples)
    if res.p_star_int is not None:
        p_top = max(p_top, 2 * res.p_star_int)
    rows = [(q, float(usl_capacity(res.params, q)), res.x1_used * float(usl_capacity(res.params, q)))
            for q in range(1, p_top + 1)]
    lines = [
        f"model      {res.model} (selected: {res.model_choice})",
        f"sigma      {res.sigma:.8g}",
        f"kappa      {res.kappa:.8g}",
        f"p*         {_fmt(res.p_star)}" + (f" (integer {res.p_star_int})" if res.p_star_int else ""),
        f"r^2        {res.r_squared:.8g}",
        f"rss        {res.rss:.6g}",
        f"x1         {res.x1_used:.8g}",
        "scores     " + ", ".join(f"{k}={_fmt(v.aicc)}" for k, v in res.scores.items()),
    ]
    if not res.converged:
        lines.append(f"warning    optimizer did not converge: {res.message}")
    lines += [f"warning    {w}" for w in res.warnings]
    _emit(args, doc, "\n".join(lines), rows)
    return EXIT_OK


# -- predict -----------------------------------------------------------------

def cmd_predict(args) -> int:
    if args.from_report:
        try:
            doc_in = ReportDocument.from_json(Path(args.from_report).read_text())
            sigma, kappa = doc_in.result["sigma"], doc_in.result["kappa"]
            x1 = args.x1 if args.x1 is not None else doc_in.result.get("x1_used", 1.0)
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read fit report {args.from_report}: {exc}") from None
    else:
        if args.sigma is None:
            raise UsageError("predict needs --sigma (and optionally --kappa) or --from-report")
        sigma, kappa = args.sigma, args.kappa
        x1 = args.x1 if args.x1 is not None else 1.0
    params = ModelParams(sigma, kappa)
    pred = fitting.predict(params, x1, args.p)
    doc = ReportDocument(
        "predict",
        {"sigma": sigma, "kappa": kappa, "x1": x1, "p": args.p},
        {
            "rows": [list(r) for r in pred.rows],
            "p_star": pred.p_star,
            "p_star_int": pred.p_star_int,
            "retrograde": pred.retrograde,
        },
    )
    text = curve_csv(pred.rows).rstrip("\n")
    text += f"\n# p* = {_fmt(pred.p_star)}"
    if pred.p_star_int is not None:
        text += f" (integer {pred.p_star_int})"
    if pred.retrograde:
        text += "\n# warning: requested p beyond p*; throughput is retrograde"
        doc.notices.append("requested p beyond p*; throughput is retrograde")
    _emit(args, doc, text, pred.rows)
    return EXIT_OK


# -- bound -------------------------------------------------------------------

def cmd_bound(args) -> int:
    qp = QueueParams(args.s, args.z, args.c)
    exact = queueing.exact_repairman(QueueParams(args.s, args.z), max(args.p))
    rows = []
    for q in args.p:
        rows.append([
            q,
            queueing.synchronous_throughput(qp, q),
            exact.throughput(q),
            q / (queueing.state_dependent_residence(qp, q) + qp.z),
            queueing.usl_from_queue(qp, q),
        ])
    try:
        p_star = usl_pstar(qp.model_params()).real
    except NoFiniteMaximum:
        p_star = None
    header = ("p", "sync_bound", "exact_throughput", "sync_state_dependent", "capacity")
    doc = ReportDocument(
        "bound",
        {"s": args.s, "z": args.z, "c": args.c, "p": args.p},
        {"sigma": qp.sigma, "kappa": qp.kappa, "p_star": p_star, "columns": list(header), "rows": rows},
    )
    text = (f"# sigma = {qp.sigma:.8g}, kappa = {qp.kappa:.8g}, p* = {_fmt(p_star)}\n"
            + curve_csv(rows, header).rstrip("\n"))
    _emit(args, doc, text, rows, header)
    return EXIT_OK


# -- simulate ----------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = SimConfig(
        p=args.p,
        service_dist=args.service,
        uptime_dist=args.uptime,
        mode=args.mode,
        state_dependence_c=args.c,
        cycles=args.cycles,
        warmup=args.warmup,
        seed=args.seed,
        batches=args.batches,
    )
    out = run_sim(cfg)
    rel = out.rel_error()
    verdict = "N/A" if rel is None else ("PASS" if rel <= args.rel_tol else "FAIL")
    result = {
        "x_hat": out.x_hat,
        "r_hat": out.r_hat,
        "ci_halfwidth": out.ci_halfwidth,
        "analytic_reference": out.analytic_reference,
        "rel_error": rel,
        "within_ci": out.within_ci(),
        "tours_used": out.tours_used,
        "completions": out.completions,
        "all_down_fraction": out.all_down_fraction,
        "verdict": verdict,
    }
    doc = ReportDocument(
        "simulate",
        {"mode": args.mode, "p": args.p, "service": str(args.service), "uptime": str(args.uptime),
         "c": args.c, "cycles": args.cycles, "warmup": args.warmup, "batches": args.batches,
         "rel_tol": args.rel_tol},
        result,
        seed=args.seed,
    )
    text = "\n".join([
        f"throughput   {out.x_hat:.8g} +/- {out.ci_halfwidth:.3g} (95% CI)",
        f"residence    {out.r_hat:.8g}",
        f"reference    {_fmt(out.analytic_reference)}",
        f"rel error    {_fmt(rel)}",
        f"tours        {out.tours_used}",
        f"all-down     {out.all_down_fraction:.4g}",
        f"result       {verdict}",
    ])
    _emit(args, doc, text, None)
    return EXIT_FAILURE if verdict == "FAIL" else EXIT_OK


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    checks = verify.run_all(args.tolerance)
    ok = all(c.passed for c in checks)
    doc = ReportDocument(
        "verify",
        {"tolerance": args.tolerance},
        {
            "passed": ok,
            "checks": [
                {"name": c.name, "max_error": c.max_error, "tolerance": c.tolerance,
                 "cases": c.cases, "passed": c.passed, "detail": c.detail}
                for c in checks
            ],
        },
    )
    width = max(len(c.name) for c in checks)
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  max_err={c.max_error:.3e}  tol={c.tolerance:.0e}"
             + (f"  {c.detail}" if c.detail else "") for c in checks]
    _emit(args, doc, "\n".join(lines), None)
    return EXIT_OK if ok else EXIT_FAILURE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit the report as JSON")
    common.add_argument("-o", "--output", metavar="PATH", help="also write the JSON report to PATH")

    parser = _Parser(prog="uslkit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", parents=[common], help="fit sigma and kappa to p,throughput CSV data")
    p.add_argument("input", help="CSV file of p,throughput rows")
    p.add_argument("--model", choices=("auto",) + fitting.MODELS, default="auto")
    p.add_argument("--baseline", type=float, help="single-processor throughput X(1)")
    p.add_argument("--curve-out", metavar="PATH", help="write fitted curve CSV to PATH")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="predict throughput over a p range")
    p.add_argument("--sigma", type=float)
    p.add_argument("--kappa", type=float, default=0.0)
    p.add_argument("--from-report", metavar="PATH", help="take parameters from a fit --json report")
    p.add_argument("--x1", type=float, help="single-processor throughput (default 1, or the report's)")
    p.add_argument("--p", type=parse_p_range, default=parse_p_range("1:32"), metavar="RANGE")
    p.add_argument("--curve-out", metavar="PATH", help="write the curve CSV to PATH")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("bound", parents=[common], help="repairman throughput bounds")
    p.add_argument("--s", type=float, required=True, help="mean service time")
    p.add_argument("--z", type=float, required=True, help="mean up time")
    p.add_argument("--c", type=float, default=0.0, help="state-dependence coefficient")
    p.add_argument("--p", type=parse_p_range, default=parse_p_range("1:16"), metavar="RANGE")
    p.add_argument("--curve-out", metavar="PATH", help="write the bound table CSV to PATH")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", parents=[common], help="discrete-event repairman simulation")
    p.add_argument("--mode", choices=MODES, default="asynchronous")
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--service", type=_dist, default=Dist("exponential", 1.0), metavar="KIND:MEAN[:CV]")
    p.add_argument("--uptime", type=_dist, default=Dist("exponential", 9.0), metavar="KIND:MEAN[:CV]")
    p.add_argument("--c", type=float, default=0.0)
    p.add_argument("--cycles", type=int, default=10_000)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--batches", type=int, default=30)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--rel-tol", type=float, default=0.02, help="pass threshold on relative error")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", parents=[common], help="check the analytic identities on a grid")
    p.add_argument("--tolerance", type=float, default=1e-12)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ParseError, FileNotFoundError, IsADirectoryError, UsageError, ConfigError) as exc:
        print(f"uslkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, FitError, SimulationError) as exc:
        print(f"uslkit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
