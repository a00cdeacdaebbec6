"""Tests for the command line: commands, outputs and exit codes."""

import io
import json

import pandas as pd
import pytest

from cli import EXIT_COMPUTATION, EXIT_FAIL, EXIT_OK, EXIT_USAGE, main, parse_horizon
from errors import ParameterError
from functions import PowerOfTwoOffset


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestTrace:

    def test_sqrt_csv(self, capsys):
        code, out, _ = run(capsys, 'trace', '--f', 'log1p', '--g', 'identity', '--set', 'sqrt',
                           '--horizon', '1000000', '--format', 'csv')
        assert code == EXIT_OK
        frame = pd.read_csv(io.StringIO(out))
        assert list(frame.columns) == ['k', 'count', 'f_count', 'f_g', 'ratio']
        assert frame['ratio'].iloc[-1] == pytest.approx(0.5, abs=0.02)

    def test_json_verdicts(self, capsys):
        code, out, _ = run(capsys, 'trace', '--f', 'identity', '--set', 'pow2', '--horizon', '100000')
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload['set'] == 'pow2'
        assert payload['verdict']['verdict'] == 'LIKELY_IN'

    def test_json_set_spec(self, capsys):
        code, out, _ = run(capsys, 'trace', '--f', 'identity', '--set', '{"elements": [1, 2, 3]}',
                           '--schedule', '10,100,1000')
        assert code == EXIT_OK
        assert json.loads(out)['samples'] == 3

    def test_zero_horizon_is_usage_error(self, capsys):
        code, _, err = run(capsys, 'trace', '--horizon', '0')
        assert code == EXIT_USAGE
        assert 'horizon' in err

    def test_unknown_set_is_usage_error(self, capsys):
        assert run(capsys, 'trace', '--set', 'primes')[0] == EXIT_USAGE

    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(capsys, 'trace', '--colour', 'red')[0] == EXIT_USAGE

    def test_outputs_are_byte_identical(self, tmp_path, capsys):
        paths = [tmp_path / 'a.csv', tmp_path / 'b.csv']
        for path in paths:
            assert run(capsys, 'trace', '--set', 'evens', '--format', 'csv', '--out', str(path))[0] == EXIT_OK
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestHorizon:

    def test_power_of_two_forms(self):
        assert parse_horizon('2^10') == 1024
        assert isinstance(parse_horizon('2^100000'), PowerOfTwoOffset)
        assert parse_horizon('1e6') == 10**6

    def test_fractional_horizon_refused(self):
        with pytest.raises(ParameterError):
            parse_horizon('10.5')


class TestDecomposeAndConstruct:

    def test_decompose_json(self, capsys):
        code, out, _ = run(capsys, 'decompose', '--f', 'identity', '--g', 'identity', '--set', 'evens',
                           '--m-max', '10')
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload['k_seq'] == [0] + [2**m for m in range(1, 11)]
        assert payload['verdict']['verdict'] == 'LIKELY_OUT'

    def test_decompose_csv(self, capsys):
        code, out, _ = run(capsys, 'decompose', '--g', 'eeu3', '--m-max', '6', '--format', 'csv')
        assert code == EXIT_OK
        assert out.splitlines()[0] == 'm,k_m,phi_omega,phi_set'

    def test_measure_ideal(self, capsys):
        code, out, _ = run(capsys, 'construct', 'eeu4', '--horizon', '100000')
        assert code == EXIT_OK
        payload = json.loads(out)
        assert payload['dominance_holds'] is True
        assert payload['mu_C']['5'] == '1'
        assert payload['verdict_C']['verdict'] == 'LIKELY_OUT'

    def test_eec2_anchors(self, capsys):
        code, out, _ = run(capsys, 'construct', 'eec2', '--m-max', '4')
        assert code == EXIT_OK
        assert json.loads(out)['anchors'] == [2, 64, 2048, 2**17]

    def test_missing_recipe(self, capsys):
        assert run(capsys, 'construct')[0] == EXIT_USAGE

    def test_computation_error(self, capsys):
        code, _, err = run(capsys, 'construct', 'ts1', '--g', 'identity', '--horizon', '1000')
        assert code == EXIT_COMPUTATION
        assert 'AnchorsNotFound' in err


class TestChecks:

    def test_passing_check(self, capsys):
        code, out, _ = run(capsys, 'check', '--claim', 'linear-ratio-converse')
        assert code == EXIT_OK
        assert 'linear-ratio-converse' in out

    def test_failing_check(self, capsys):
        code, out, _ = run(capsys, 'check', '--claim', 'growth-criterion', '--params', '{"M": 1000}')
        assert code == EXIT_FAIL
        assert 'VIOLATED' in out

    def test_json_report_to_file(self, tmp_path, capsys):
        path = tmp_path / 'check.json'
        code, _, _ = run(capsys, 'check', '--claim', 'modulus-axioms', '--out', str(path))
        assert code == EXIT_OK
        report = json.loads(path.read_text())
        assert report['checks'][0]['status'] == 'PASS'

    def test_unknown_claim(self, capsys):
        assert run(capsys, 'check', '--claim', 'riemann')[0] == EXIT_USAGE

    def test_bad_params(self, capsys):
        assert run(capsys, 'check', '--claim', 'growth-criterion', '--params', '{"N": 1}')[0] == EXIT_USAGE
        assert run(capsys, 'check', '--claim', 'growth-criterion', '--params', '[1]')[0] == EXIT_USAGE

    def test_claims_listing(self, capsys):
        code, out, _ = run(capsys, 'claims')
        assert code == EXIT_OK
        assert len(out.splitlines()) == 28

    def test_config_summary(self, capsys):
        code, out, _ = run(capsys, 'config')
        assert code == EXIT_OK
        assert 'Density Lab Configuration' in out

    def test_unknown_suite(self, capsys):
        assert run(capsys, 'suite', 'nightly')[0] == EXIT_USAGE

    @pytest.mark.slow
    def test_smoke_suite(self, capsys):
        code, out, _ = run(capsys, 'suite', 'smoke')
        assert code == EXIT_OK
        assert 'PASSED' in out


class TestRunConfig:

    def test_file_values_used(self, tmp_path, capsys):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'command': 'trace', 'set': 'evens', 'horizon': 1000}))
        code, out, _ = run(capsys, 'trace', '--config', str(path))
        assert code == EXIT_OK
        payload = json.loads(out)
        assert (payload['set'], payload['horizon']) == ('evens', 1000)

    def test_flags_override_file(self, tmp_path, capsys):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'set': 'evens', 'horizon': 1000}))
        code, out, _ = run(capsys, 'trace', '--config', str(path), '--set', 'pow2')
        assert code == EXIT_OK
        assert json.loads(out)['set'] == 'pow2'

    def test_unknown_key(self, tmp_path, capsys):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'colour': 'red'}))
        assert run(capsys, 'trace', '--config', str(path))[0] == EXIT_USAGE

    def test_command_mismatch(self, tmp_path, capsys):
        path = tmp_path / 'run.json'
        path.write_text(json.dumps({'command': 'suite'}))
        assert run(capsys, 'trace', '--config', str(path))[0] == EXIT_USAGE

    def test_bad_log_level(self, capsys):
        assert run(capsys, 'config', '--log-level', 'LOUD')[0] == EXIT_USAGE
