#!/usr/bin/env python3
"""
Density Lab command line
Ratio traces, interval decompositions, witness constructions and claim suites
for the ideals Z_g(f), with CSV/JSON export.

Exit codes: 0 success, 1 a check failed, 2 usage error, 3 computation error.
"""

import argparse
import json
import logging
import re
import sys

import pandas as pd

from constructions import (
    antichain_bit_vectors,
    eec_case1_set,
    eec_case2_set,
    eu_block_sets,
    eu_measure_ideal,
    example_e_set,
    exh_verdict,
    increasing_dominance_check,
    lo1_witness,
    measure_values,
    p1_union_witness,
    ps1_family,
    raw_divergence,
    set_from_spec,
    ts1_anchors,
    ts1_weight,
)
from decomposition import (
    build_decomposition,
    decomposition_verdict,
    doubling_decomposition,
    sup_phi_omega,
)
from density import classical_verdicts, lower_verdict, membership_verdict, named_schedule, ratio_trace
from errors import USAGE_ERRORS, DensityLabError, ParameterError
from exports import count_frame, decomposition_frame, trace_frame, write_csv, write_json
from functions import modulus_from_spec, parse_number, power_of_two, weight_from_spec
from lab_config import LabConfig, load_run_config
from verify import CheckStatus, format_report, list_claims, report_dict, run_check, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_COMPUTATION = 3

RECIPES = ('sqrt', 'lo1', 'p1', 'ts1', 'ps1', 'eec1', 'eec2', 'eeu4', 'eeu5', 'pd6')
PS1_BLOCKS = 5
PS1_MEMBERS = 8

# applied after --config values, for flags left unset on the command line
FLAG_DEFAULTS = {
    'f': 'log1p',
    'g': 'identity',
    'set': 'sqrt',
    'horizon': '1000000',
    'schedule': 'geometric',
    'format': 'json',
    'suite': 'smoke',
    'seed': None,
    'epsilon': None,
    'delta': None,
    'm_max': 16,
    'alpha': 0.5,
    'params': None,
    'jobs': None,
    'log_level': None,
    'form': 'pow2',
}

_POWER_RE = re.compile(r'^\s*2\s*\^\s*(\d+)\s*$')


class LabArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so main() owns the exit codes"""

    def error(self, message):
        raise ParameterError(message)


def setup_logging(level=None, log_file=None):
    """Configure root logging with the lab format; file output when log_file is set"""
    name = (level or LabConfig.LOG_LEVEL).upper()
    numeric = logging.getLevelName(name)
    if not isinstance(numeric, int):
        raise ParameterError(f"Unknown log level: {level}")
    handlers = [logging.StreamHandler(sys.stderr)]
    if log_file:
        handlers.append(logging.FileHandler(log_file))
    logging.basicConfig(level=numeric, format=LabConfig.LOG_FORMAT, handlers=handlers, force=True)


def parse_horizon(text):
    """Integer horizon; '2^e' gives a power of two, symbolic past the materialize limit"""
    if isinstance(text, str):
        match = _POWER_RE.match(text)
        if match:
            return power_of_two(int(match.group(1)))
    value = parse_number(text)
    if isinstance(value, float):
        if not value.is_integer():
            raise ParameterError(f"horizon must be an integer, got {text}")
        value = int(value)
    if value < 1:
        raise ParameterError(f"horizon must be >= 1, got {text}")
    return value


def parse_spec(value):
    """JSON object text becomes a dict spec; anything else passes through"""
    if isinstance(value, str) and value.lstrip().startswith(('{', '[')):
        try:
            return json.loads(value)
        except json.JSONDecodeError as e:
            raise ParameterError(f"Bad JSON spec {value!r}: {e}") from e
    return value


def _add_common(parser):
    parser.add_argument('--config', help='JSON run configuration; flags override its values')
    parser.add_argument('--log-level', dest='log_level', help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--out', help='output file (default: standard output)')
    parser.add_argument('--format', choices=('csv', 'json'))
    parser.add_argument('--seed', type=int)
    parser.add_argument('--jobs', type=int)


def _add_functions(parser):
    parser.add_argument('--f', help='modulus: catalog name or JSON spec')
    parser.add_argument('--g', help='weight: catalog name, shorthand or JSON spec')
    parser.add_argument('--set', help='set: name, call or JSON spec')
    parser.add_argument('--horizon', help="index horizon, e.g. 1000000 or 2^8192")
    parser.add_argument('--epsilon', type=float)
    parser.add_argument('--delta', type=float)


def build_parser():
    parser = LabArgumentParser(prog='cli.py', description='Modular density ideal lab')
    commands = parser.add_subparsers(dest='command', parser_class=LabArgumentParser)
    commands.required = True

    trace = commands.add_parser('trace', help='ratio trace and verdicts for one set')
    _add_common(trace)
    _add_functions(trace)
    trace.add_argument('--schedule', help='geometric, scan, pow2, pow4, factorial, factorial_exp, linear or k1,k2,...')

    decompose = commands.add_parser('decompose', help='interval decomposition and block submeasures')
    _add_common(decompose)
    _add_functions(decompose)
    decompose.add_argument('--m-max', dest='m_max', type=int)
    decompose.add_argument('--form', choices=('pow2', 'doubling'))

    construct = commands.add_parser('construct', help='witness sets, weights and measure ideals')
    _add_common(construct)
    _add_functions(construct)
    construct.add_argument('recipe', nargs='?', choices=RECIPES)
    construct.add_argument('--m-max', dest='m_max', type=int)
    construct.add_argument('--alpha', type=float)

    check = commands.add_parser('check', help='run one claim check')
    _add_common(check)
    check.add_argument('--claim')
    check.add_argument('--params', help='JSON object of claim parameters')

    suite = commands.add_parser('suite', help='run a claim suite')
    _add_common(suite)
    suite.add_argument('name', nargs='?', choices=('smoke', 'full'))
    suite.add_argument('--suite', choices=('smoke', 'full'))

    for name, text in (('config', 'print the configuration'), ('claims', 'list registered claims')):
        sub = commands.add_parser(name, help=text)
        _add_common(sub)
    return parser


def parse_args(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, 'name', None) and not getattr(args, 'suite', None):
        args.suite = args.name

    if args.config:
        settings = load_run_config(args.config)
        command = settings.pop('command', args.command)
        if command != args.command:
            raise ParameterError(f"config {args.config} is for '{command}', not '{args.command}'")
        for key, value in settings.items():
            if getattr(args, key, None) is None:
                setattr(args, key, value)
    for key, value in FLAG_DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if args.seed is None:
        args.seed = LabConfig.DEFAULT_SEED
    return args


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def emit(args, payload, frame=None):
    """Write payload as JSON or frame as CSV to --out or standard output"""
    target = args.out or sys.stdout
    if args.format == 'csv':
        if frame is None:
            raise ParameterError(f"'{args.command}' has no CSV form; use --format json")
        write_csv(frame, target)
    else:
        write_json(payload, target)
    if args.out:
        print(f"✅ Saved {args.format.upper()} to {args.out}", file=sys.stderr)


def _functions(args):
    return modulus_from_spec(parse_spec(args.f)), weight_from_spec(parse_spec(args.g))


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_trace(args):
    f, g = _functions(args)
    C = set_from_spec(parse_spec(args.set))
    horizon = parse_horizon(args.horizon)
    schedule = named_schedule(parse_spec(args.schedule), horizon, g)
    trace = ratio_trace(f, g, C, schedule, n_jobs=args.jobs or 1)
    verdict = membership_verdict(trace, args.epsilon, args.delta)
    lower = lower_verdict(trace, args.epsilon, args.delta)
    payload = {
        'f': f.name,
        'g': g.name,
        'set': C.name,
        'horizon': horizon,
        'samples': len(trace),
        'skipped': trace.skipped,
        'final_ratio': trace.ratios[-1],
        'verdict': verdict,
        'lower_verdict': lower,
    }
    emit(args, payload, trace_frame(trace))
    return EXIT_OK


def cmd_decompose(args):
    f, g = _functions(args)
    C = set_from_spec(parse_spec(args.set)) if args.set else None
    if args.form == 'doubling':
        decomp = doubling_decomposition(f, g, args.m_max)
    else:
        decomp = build_decomposition(f, g, args.m_max)
    best, best_m = sup_phi_omega(decomp)
    payload = {
        'f': f.name,
        'g': g.name,
        'form': decomp.form,
        'k_seq': decomp.k_seq,
        'start_m': decomp.start_m,
        'truncated': decomp.truncated,
        'sup_phi_omega': best,
        'sup_phi_omega_at': best_m,
    }
    if C is not None:
        payload['set'] = C.name
        payload['verdict'] = decomposition_verdict(decomp, C, args.epsilon, args.delta)
    emit(args, payload, decomposition_frame(decomp, C))
    return EXIT_OK


def _set_output(C, horizon, extra):
    schedule = named_schedule('geometric', horizon)
    frame = count_frame(C, schedule)
    payload = {'set': C.name, 'samples': {'k': list(schedule), 'count': [C.count(k) for k in schedule]}}
    payload.update(extra)
    return payload, frame


def construct_sqrt(args, f, g, horizon):
    C = example_e_set()
    return _set_output(C, horizon, {'verdicts': classical_verdicts(C, horizon, f)})


def construct_lo1(args, f, g, horizon):
    C, anchors = lo1_witness(f, g, args.m_max, horizon=horizon)
    schedule = [2 * k for k in anchors]
    trace = ratio_trace(f, g, C, schedule)
    payload = {'set': C.name, 'anchors': anchors, 'trace_at_2k': trace.ratios}
    return payload, count_frame(C, sorted(set(anchors) | set(schedule)))


def construct_p1(args, f, g, horizon):
    C = set_from_spec(parse_spec(args.set))
    witness = p1_union_witness(f, C, horizon, epsilon=args.epsilon, delta=args.delta)
    payload = {
        'set': C.name,
        'weight': witness.weight,
        'anchors': witness.anchors,
        'anchor_ratios': witness.anchor_ratios,
        'verdict': witness.verdict,
    }
    return payload, count_frame(C, witness.anchors)


def construct_ts1(args, f, g, horizon):
    anchors = ts1_anchors(f, g, horizon)
    h = ts1_weight(f, g, anchors=anchors)
    frame = pd.DataFrame({
        'm': [a.m for a in anchors],
        'k': [str(a.k) for a in anchors],
        'width': [str(a.width) for a in anchors],
        'ratio': [a.ratio for a in anchors],
    })
    return {'weight': h, 'anchors': anchors}, frame


def construct_ps1(args, f, g, horizon):
    anchors = ts1_anchors(f, g, horizon, max_anchors=PS1_BLOCKS)
    h = ts1_weight(f, g, anchors=anchors)
    ks = [a.k for a in anchors]
    family = ps1_family(f, g, h, ks, antichain_bit_vectors(len(ks), PS1_MEMBERS))
    divergent = [sum(1 for other in family if other is not member and raw_divergence(member, other, ks))
                 for member in family]
    frame = pd.DataFrame({'member': [w.name for w in family], 'divergent_from': divergent})
    return {'weight': h, 'anchors': ks, 'members': family, 'divergent_from': divergent}, frame


def construct_eec1(args, f, g, horizon):
    C = eec_case1_set(args.alpha)
    return _set_output(C, horizon, {'alpha': args.alpha})


def construct_eec2(args, f, g, horizon):
    C, anchors = eec_case2_set(m_max=args.m_max)
    return {'set': C.name, 'anchors': anchors, 'counts': [C.count(k) for k in anchors]}, count_frame(C, anchors)


def construct_measure_ideal(args, f, g, horizon):
    spec = eu_measure_ideal(args.recipe)
    C, D = eu_block_sets(spec)
    dominated, first = increasing_dominance_check(C, D, horizon)
    payload = {
        'ideal': spec.name,
        'dominance_holds': dominated,
        'first_violation': first,
        'mu_C': measure_values(spec, C, args.m_max),
        'mu_D': measure_values(spec, D, args.m_max),
        'verdict_C': exh_verdict(spec, C, args.m_max, args.epsilon, args.delta),
        'verdict_D': exh_verdict(spec, D, args.m_max, args.epsilon, args.delta),
    }
    schedule = named_schedule('geometric', horizon)
    frame = pd.DataFrame({'k': schedule, 'count_C': [C.count(k) for k in schedule],
                          'count_D': [D.count(k) for k in schedule]})
    return payload, frame


CONSTRUCTIONS = {
    'sqrt': construct_sqrt,
    'lo1': construct_lo1,
    'p1': construct_p1,
    'ts1': construct_ts1,
    'ps1': construct_ps1,
    'eec1': construct_eec1,
    'eec2': construct_eec2,
    'eeu4': construct_measure_ideal,
    'eeu5': construct_measure_ideal,
    'pd6': construct_measure_ideal,
}


def cmd_construct(args):
    if args.recipe is None:
        raise ParameterError(f"construct needs a recipe: {', '.join(RECIPES)}")
    if args.recipe not in CONSTRUCTIONS:
        raise ParameterError(f"Unknown recipe {args.recipe!r}")
    f, g = _functions(args)
    horizon = parse_horizon(args.horizon)
    payload, frame = CONSTRUCTIONS[args.recipe](args, f, g, horizon)
    payload['recipe'] = args.recipe
    emit(args, payload, frame)
    return EXIT_OK


def _report(args, checks, suite):
    if args.out:
        write_json(report_dict(checks, suite), args.out)
    if args.format == 'json' and not args.out:
        write_json(report_dict(checks, suite), sys.stdout)
    else:
        print(format_report(checks, suite))
    return EXIT_FAIL if any(c.status is CheckStatus.FAIL for c in checks) else EXIT_OK


def cmd_check(args):
    if not args.claim:
        raise ParameterError("check needs --claim (see the 'claims' command)")
    params = parse_spec(args.params) if args.params else {}
    if not isinstance(params, dict):
        raise ParameterError("--params must be a JSON object")
    return _report(args, [run_check(args.claim, params)], None)


def cmd_suite(args):
    return _report(args, run_suite(args.suite, n_jobs=args.jobs), args.suite)


def cmd_config(args):
    print("=" * 60)
    print("           DENSITY LAB CONFIGURATION")
    print("=" * 60)
    print(LabConfig.get_config_summary())
    return EXIT_OK


def cmd_claims(args):
    for claim_id, description in list_claims():
        print(f"{claim_id:28s} {description}")
    return EXIT_OK


COMMANDS = {
    'trace': cmd_trace,
    'decompose': cmd_decompose,
    'construct': cmd_construct,
    'check': cmd_check,
    'suite': cmd_suite,
    'config': cmd_config,
    'claims': cmd_claims,
}


def main(argv=None):
    try:
        args = parse_args(argv)
        setup_logging(args.log_level, LabConfig.LOG_FILE)
    except ParameterError as e:
        print(f"❌ Usage error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return COMMANDS[args.command](args)
    except USAGE_ERRORS as e:
        print(f"❌ Usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DensityLabError as e:
        logger.info(f"{args.command} stopped: {type(e).__name__}")
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_COMPUTATION


if __name__ == "__main__":
    sys.exit(main())
