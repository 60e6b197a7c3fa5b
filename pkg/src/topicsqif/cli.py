"""Command-line front end.

    topicsqif leakage topics --taxonomy 350 --k 5
    topicsqif leakage cookies --domains 500
    topicsqif analyze channel.csv --prior uniform --hyper
    topicsqif sweep --m 50:500:50 --k 1,3,5,10 --out sweep.csv
    topicsqif simulate --config sim.json --out report.json

Exit codes: 0 success, 2 usage or validation error, 3 I/O error,
4 simulation failure.  Results go to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import csvio
from .core import (
    InvalidChannelError,
    InvalidDistributionError,
    hyper,
    log10_value,
    uniform_prior,
    vulnerability_report,
)
from .models import (
    UNREPRODUCED_COOKIE_FIGURE_40PCT,
    cookies_closed_form_leakage,
    cookies_closed_form_vulnerability,
    format_sig,
    fraction_json,
    leakage_sweep,
    topics_closed_form_leakage,
    topics_closed_form_vulnerability,
)
from .simulator import GenerationFailure, SimulationConfig, run_simulation

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SIM = 0, 2, 3, 4
EXACT_INT_LIMIT = 10**30


class UsageError(Exception):
    pass


def parse_range(text: str) -> list[int]:
    """``start:stop[:step]``, inclusive of ``stop`` when the step lands on it; or a single int."""
    parts = text.split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected start:stop[:step]") from None
    if len(nums) == 1:
        return nums
    if len(nums) not in (2, 3):
        raise UsageError(f"bad range {text!r}; expected start:stop[:step]")
    start, stop = nums[0], nums[1]
    step = nums[2] if len(nums) == 3 else 1
    if step <= 0 or stop < start:
        raise UsageError(f"empty range {text!r}")
    return list(range(start, stop + 1, step))


def parse_int_list(text: str) -> list[int]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        out.extend(parse_range(item))
    if not out:
        raise UsageError(f"empty list {text!r}")
    return out


def _render(value) -> str:
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Fraction):
        exact = str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"
        return f"{format_sig(value)} (exact {exact})"
    if isinstance(value, float):
        return format_sig(value)
    return str(value)


def _emit(fields: dict, as_json: bool, out=None) -> None:
    out = out or sys.stdout
    if as_json:
        data = {
            k: (fraction_json(v) if isinstance(v, (int, Fraction)) and not isinstance(v, bool) else v)
            for k, v in fields.items()
        }
        out.write(json.dumps(data, indent=2) + "\n")
        return
    for k, v in fields.items():
        out.write(f"{k}: {_render(v)}\n")


# ---------------------------------------------------------------------------
# leakage


def cmd_leakage(args) -> dict:
    n = args.users
    if n is not None and n < 1:
        raise UsageError("--users must be >= 1")
    if args.model == "topics":
        if args.taxonomy is None or args.k is None:
            raise UsageError("topics needs --taxonomy and --k")
        m, k = args.taxonomy, args.k
        if k < 1 or m < k:
            raise UsageError(f"need 1 <= k <= M, got M={m}, k={k}")
        leak = topics_closed_form_leakage(m, k)
        fields = {"model": "topics", "observed_topics": m, "k": k}
        if n is None:
            fields["prior_vulnerability"] = "1/N"
            fields["posterior_vulnerability"] = f"{leak}/N" if leak.denominator == 1 else f"({leak})/N"
        else:
            post = topics_closed_form_vulnerability(n, m, k)
            fields["users"] = n
            fields["prior_vulnerability"] = Fraction(1, n)
            fields["posterior_vulnerability"] = post
        fields["multiplicative_leakage"] = leak
        fields["log10_multiplicative_leakage"] = float(f"{log10_value(leak):.6g}")
        if n is not None:
            fields["additive_leakage"] = fields["posterior_vulnerability"] - Fraction(1, n)
        return fields

    if args.domains is None:
        raise UsageError("cookies needs --domains")
    m_prime = args.domains
    if m_prime < 2:
        raise UsageError(f"--domains must be >= 2, got {m_prime}")
    res = cookies_closed_form_leakage(m_prime)
    fields = {"model": "cookies", "contexts": m_prime}
    if n is None:
        fields["prior_vulnerability"] = "1/N"
        fields["posterior_vulnerability"] = (
            f"{res.value}/N" if res.value <= EXACT_INT_LIMIT else f"10^{res.log10:.6f}/N"
        )
    else:
        fields["users"] = n
        fields["prior_vulnerability"] = Fraction(1, n)
        fields["posterior_vulnerability"] = cookies_closed_form_vulnerability(m_prime, n)
    if res.value <= EXACT_INT_LIMIT:
        fields["multiplicative_leakage"] = res.value
    else:
        fields["multiplicative_leakage"] = f"2^{m_prime} - {m_prime + 1} (exact integer omitted, > 1e30)"
    fields["log10_multiplicative_leakage"] = float(f"{res.log10:.10g}")
    if n is not None:
        fields["additive_leakage"] = fields["posterior_vulnerability"] - Fraction(1, n)
    if res.published_figure is not None:
        fields["note"] = (
            f"a published figure of {res.published_figure} exists for M'={m_prime}; the binomial sum "
            f"evaluates to 10^{res.log10:.4f}, so that figure is not reproduced"
        )
    elif m_prime == 200:
        fields["note"] = (
            f"a published figure of {UNREPRODUCED_COOKIE_FIGURE_40PCT} exists for roughly 40% of 500 contexts; "
            f"the binomial sum for M'=200 evaluates to 10^{res.log10:.4f}, so that figure is not reproduced"
        )
    return fields


# ---------------------------------------------------------------------------
# analyze


def cmd_analyze(args) -> tuple[dict, str | None]:
    exact = False if args.float else None
    channel = csvio.read_channel(args.channel, exact=exact)
    if args.prior == "uniform":
        prior = uniform_prior(len(channel.row_labels), channel.row_labels, exact=channel.exact)
    else:
        prior = csvio.read_distribution(args.prior, exact=exact)
        if set(prior.labels) != set(channel.row_labels):
            raise UsageError("prior labels do not match the channel's row labels")
        channel = channel.reorder_rows(prior.labels)
    rep = vulnerability_report(prior, channel)
    fields = {
        "secrets": len(channel.row_labels),
        "outputs": len(channel.col_labels),
        "mode": "exact" if channel.exact and prior.exact else "float",
        "prior_vulnerability": rep.prior_v,
        "posterior_vulnerability": rep.posterior_v,
        "multiplicative_leakage": rep.mult_leakage,
        "log10_multiplicative_leakage": rep.log10_mult_leakage,
        "additive_leakage": rep.add_leakage,
    }
    hyper_csv = csvio.write_hyper(hyper(prior, channel)) if args.hyper else None
    return fields, hyper_csv


# ---------------------------------------------------------------------------
# sweep / simulate


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def cmd_sweep(args) -> int:
    m_values = parse_int_list(args.m)
    k_values = parse_int_list(args.k)
    result = leakage_sweep(m_values, k_values)
    _write_text(args.out, result.to_csv())
    for m, k in result.skipped:
        print(f"skipped M={m}, k={k}: M < k", file=sys.stderr)
    print(f"{len(result.rows)} rows written to {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
    if not isinstance(raw, dict):
        raise UsageError("config must be a JSON object")
    cfg = SimulationConfig.from_dict(raw)
    report = run_simulation(cfg)
    _write_text(args.out, json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="topicsqif", description="QIF leakage of third-party cookies and the Topics API")
    sub = ap.add_subparsers(dest="command", required=True)

    lk = sub.add_parser("leakage", help="closed-form vulnerability and leakage")
    lk.add_argument("model", choices=["topics", "cookies"])
    lk.add_argument("--taxonomy", type=int, help="M, number of observed topics (topics model)")
    lk.add_argument("--k", type=int, help="size of the top-k topics set (topics model)")
    lk.add_argument("--domains", type=int, help="M', number of contexts with third-party cookies (cookies model)")
    lk.add_argument("--users", type=int, help="N, number of users; enables numeric prior/posterior")
    lk.add_argument("--json", action="store_true", help="emit JSON instead of key: value lines")

    an = sub.add_parser("analyze", help="vulnerability and leakage of a channel CSV")
    an.add_argument("channel", help="channel CSV (empty first header cell, row label + entries per line)")
    an.add_argument("--prior", default="uniform", help="'uniform' or a distribution CSV (label,probability)")
    an.add_argument("--hyper", action="store_true", help="also print the hyper-distribution as CSV")
    an.add_argument("--float", action="store_true", help="force floating-point mode")
    an.add_argument("--json", action="store_true")

    sw = sub.add_parser(
        "sweep",
        help="Topics leakage M/k over a grid",
        description="Ranges are start:stop[:step], inclusive of stop when the step lands on it.",
    )
    sw.add_argument("--m", required=True, help="observed-topic range, e.g. 50:500:50")
    sw.add_argument("--k", required=True, help="comma-separated top-k sizes, e.g. 1,3,5,10")
    sw.add_argument("--out", required=True, help="output CSV path, or - for stdout")

    sm = sub.add_parser("simulate", help="Monte-Carlo simulation of the Topics mechanism")
    sm.add_argument("--config", required=True, help="JSON config")
    sm.add_argument("--out", required=True, help="output JSON path, or - for stdout")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "leakage":
            _emit(cmd_leakage(args), args.json)
            return EXIT_OK
        if args.command == "analyze":
            fields, hyper_csv = cmd_analyze(args)
            _emit(fields, args.json)
            if hyper_csv is not None:
                sys.stdout.write("\n" + hyper_csv)
            return EXIT_OK
        if args.command == "sweep":
            return cmd_sweep(args)
        return cmd_simulate(args)
    except GenerationFailure as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (UsageError, InvalidChannelError, InvalidDistributionError, ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    raise SystemExit(main())
