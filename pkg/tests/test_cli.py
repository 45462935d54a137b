import cmath
import math
import re

import pytest

from app.api.formatter import formatter
from app.cli import build_parser, main


E_MINUS_SIXTH = math.exp(-1 / 6)


class TestPderiv:
    def test_examples(self, run_json):
        status, envelope = run_json("pderiv", "--f", "exp(x1^2)", "--x", "1")
        assert status == 0
        assert envelope["status"] == "ok"
        assert envelope["error"] is None
        assert envelope["result"] == pytest.approx(7.389056, rel=1e-6)

        status, envelope = run_json("pderiv", "--f", "5^x1", "--x", "3.7")
        assert envelope["result"] == pytest.approx(5.0, rel=1e-14)

    def test_zero_is_a_domain_error(self, run_json):
        status, envelope = run_json("pderiv", "--f", "x1", "--x", "0")
        assert status == 2
        assert envelope["status"] == "error"
        assert envelope["result"] is None
        assert envelope["error"]["kind"] == "DomainError"
        assert envelope["error"]["exit_code"] == 2

    def test_parse_error_carries_offset(self, run_json):
        status, envelope = run_json("pderiv", "--f", "x1 + * x2", "--x", "1")
        assert status == 1
        assert envelope["error"]["kind"] == "ParseError"
        assert envelope["error"]["diagnostic"]["offset"] == 5


class TestProductIntegrals:
    def test_pint(self, run_json):
        status, envelope = run_json("pint", "--f", "exp(x1)", "--a", "0", "--b", "1")
        assert status == 0
        assert envelope["result"] == pytest.approx(1.648721, rel=1e-6)

    def test_pint_signed_sine(self, run_json):
        status, envelope = run_json("pint", "--f", "sin(x1)", "--a", "0", "--b", "6.283185307", "--signed")
        assert status == 0
        value = complex(envelope["result"]["re"], envelope["result"]["im"])
        expected = cmath.exp(1j * math.pi ** 2) * 2.0 ** (-2 * math.pi)
        assert abs(value - expected) <= 1e-6 * abs(expected)
        assert envelope["diagnostics"]

    def test_pint_signed_constant(self, run_json):
        status, envelope = run_json("pint", "--f", "0 - 3", "--a", "0", "--b", "2", "--signed")
        assert envelope["result"]["re"] == pytest.approx(9.0, rel=1e-10)
        assert envelope["result"]["im"] == pytest.approx(0.0, abs=1e-9)

    def test_pint_rejects_sign_change_without_flag(self, run_json):
        status, envelope = run_json("pint", "--f", "sin(x1)", "--a", "0", "--b", "6.283185307")
        assert status == 2
        assert envelope["error"]["kind"] == "NonPositiveIntegrand"

    def test_convergence_failure(self, run_json):
        status, envelope = run_json("pint", "--f", "sin(x1)", "--a", "0", "--b", "6.283185307", "--signed", "--budget", "3")
        assert status == 3
        assert envelope["error"]["kind"] == "NonIntegrableSingularity"

    def test_reversed_interval_is_a_usage_error(self, run_json):
        status, envelope = run_json("pint", "--f", "exp(x1)", "--a", "1", "--b", "0")
        assert status == 1
        assert envelope["error"]["kind"] == "UsageError"

    def test_geomean(self, run_json):
        status, envelope = run_json("geomean", "--f", "sin(x1)", "--a", "0", "--b", "6.283185307")
        assert status == 0
        assert envelope["result"]["re"] == pytest.approx(0.0, abs=1e-6)
        assert envelope["result"]["im"] == pytest.approx(0.5, abs=1e-6)
        assert any("sign changes" in note for note in envelope["diagnostics"])

        _, envelope = run_json("geomean", "--f", "x1", "--a", "1", "--b", "3")
        assert envelope["result"] == pytest.approx(1.911304, rel=1e-6)

        _, envelope = run_json("geomean", "--f", "7", "--a", "-1", "--b", "2")
        assert envelope["result"] == pytest.approx(7.0, rel=1e-14)

    def test_vint(self, run_json):
        _, envelope = run_json("vint", "--g", "cos(x1)", "--a", "0", "--b", "1.570796327")
        assert envelope["result"] == pytest.approx(math.e, abs=1e-8)

        _, envelope = run_json("vint", "--g", "0", "--a", "0", "--b", "5")
        assert envelope["result"] == 1.0

        _, volterra = run_json("vint", "--g", "ln(x1)", "--a", "1", "--b", "3")
        _, geometric = run_json("pint", "--f", "x1", "--a", "1", "--b", "3")
        assert volterra["result"] == pytest.approx(geometric["result"], rel=1e-12)


class TestForms:
    def test_qdiff_zero_form(self, run_json):
        status, envelope = run_json("qdiff", "--n", "2", "--form", "0:exp(x1*x2)")
        assert status == 0
        result = envelope["result"]
        assert (result["degree"], result["dimension"]) == (1, 2)
        assert result["coefficients"] == {"dx1": "exp(x2)", "dx2": "exp(x1)"}
        assert result["values"] is None

    def test_qdiff_twice_is_identity(self, run_json):
        _, envelope = run_json("qdiff", "--n", "2", "--form", "dx1:exp(x2); dx2:exp(x1)")
        assert envelope["result"]["coefficients"] == {"dx1^dx2": "1"}
        assert envelope["result"]["values"] == {"dx1^dx2": 1.0}

    def test_qdiff_one_form(self, run_json):
        _, envelope = run_json("qdiff", "--n", "3", "--form", "dx1:exp(x1*x2)", "--at", "0.5,0.2,0.3")
        result = envelope["result"]
        assert result["coefficients"]["dx1^dx2"] == "exp(-x1)"
        assert result["coefficients"]["dx2^dx3"] == "1"
        assert result["values"]["dx1^dx2"] == pytest.approx(math.exp(-0.5), rel=1e-15)

    def test_qdiff_of_top_degree(self, run_json):
        status, envelope = run_json("qdiff", "--n", "2", "--form", "dx1^dx2:exp(x1)")
        assert status == 2
        assert envelope["error"]["kind"] == "DegreeOverflow"

    def test_malformed_form(self, run_json):
        status, envelope = run_json("qdiff", "--n", "2", "--form", "dx2^dx1:3")
        assert status == 1
        assert envelope["error"]["kind"] == "FormSpecError"

    def test_wedge_constants(self, run_json):
        left, right = "dx1:2; dx2:3; dx3:5", "dx1:7; dx2:11; dx3:13"
        _, envelope = run_json("wedge", "--left", left, "--right", right, "--n", "3")
        expected = {"dx1^dx2": 22 / 21, "dx1^dx3": 26 / 35, "dx2^dx3": 39 / 55}
        assert envelope["result"]["values"] == pytest.approx(expected, rel=1e-15)

        _, swapped = run_json("wedge", "--left", right, "--right", left, "--n", "3")
        assert swapped["result"]["values"] == pytest.approx({k: 1 / v for k, v in expected.items()}, rel=1e-15)

    def test_wedge_degree_overflow(self, run_json):
        status, envelope = run_json("wedge", "--left", "dx1^dx2:2", "--right", "dx2^dx3:3", "--n", "3")
        assert status == 2
        assert envelope["error"]["kind"] == "DegreeOverflow"


class TestStokes:
    def test_zero_form(self, run_json):
        status, envelope = run_json("stokes", "--n", "1", "--form", "0:exp(x1)", "--chain", "[(0),(1)]")
        assert status == 0
        assert envelope["result"]["lhs"] == pytest.approx(math.e, rel=1e-14)
        assert envelope["result"]["rhs"] == pytest.approx(math.e, rel=1e-14)

    def test_triangle(self, run_json):
        status, envelope = run_json(
            "stokes", "--n", "2", "--form", "dx1:exp(x1*x2)", "--chain", "[(0,0),(1,0),(0,1)]"
        )
        result = envelope["result"]
        assert result["lhs"] == pytest.approx(E_MINUS_SIXTH, rel=1e-10)
        assert result["rhs"] == pytest.approx(E_MINUS_SIXTH, rel=1e-10)
        assert result["log_discrepancy"] <= 1e-8
        assert len(result["breakdown"]) == 1

    def test_weighted_chain(self, run_json):
        chain = "2*[(0,0),(1,0),(0,1)] - 0.5*[(1,0),(1,1),(0,1)]"
        status, envelope = run_json("stokes", "--n", "2", "--form", "dx1:exp(x1*x2); dx2:x1+2", "--chain", chain)
        assert status == 0
        assert [entry["weight"] for entry in envelope["result"]["breakdown"]] == [2.0, -0.5]
        assert envelope["result"]["log_discrepancy"] <= 1e-8

    def test_degenerate_simplex(self, run_json):
        status, envelope = run_json(
            "stokes", "--n", "2", "--form", "dx1:exp(x1*x2)", "--chain", "[(0,0),(0,0),(1,0)]"
        )
        assert status == 2
        assert envelope["error"]["kind"] == "DegenerateSimplex"
        assert envelope["result"] is None


class TestSurface:
    def test_missing_argument_exits_with_usage_status(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["pderiv", "--x", "1"])
        assert exc.value.code == 1
        assert "--f" in capsys.readouterr().err

    def test_unknown_command(self):
        with pytest.raises(SystemExit) as exc:
            main(["integrate"])
        assert exc.value.code == 1

    def test_version(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "prodcalc" in capsys.readouterr().out

    def test_global_flags_after_subcommand(self):
        args = build_parser().parse_args(["pint", "--f", "x1", "--a", "1", "--b", "2", "--json", "--order", "8"])
        assert args.json is True
        assert args.order == 8
        assert args.tol is None

    def test_global_flags_before_subcommand(self):
        args = build_parser().parse_args(["--json", "--tol", "1e-6", "pderiv", "--f", "x1", "--x", "1"])
        assert args.json is True
        assert args.tol == 1e-6

    def test_json_output_is_deterministic(self, run_cli):
        argv = ("--json", "stokes", "--n", "2", "--form", "dx1:exp(x1*x2)", "--chain", "[(0,0),(1,0),(0,1)]")
        first = run_cli(*argv)
        second = run_cli(*argv)
        assert first == second
        assert first[1].count("\n") == 1

    def test_human_output(self, run_cli):
        status, out = run_cli("pint", "--f", "0 - 3", "--a", "0", "--b", "1", "--signed")
        assert status == 0
        assert re.fullmatch(r"-3[+-][0-9.e+-]+i", out.strip())

        status, out = run_cli("pderiv", "--f", "x1", "--x", "0")
        assert status == 2
        assert out.startswith("error [DomainError]:")

        status, out = run_cli("pderiv", "--f", "x1 +", "--x", "0")
        assert status == 1
        assert "at offset" in out

    def test_complex_rendering(self):
        assert formatter.format_complex(0.0, 0.5) == "0+0.5i"
        assert formatter.format_complex(1.5, -2.0) == "1.5-2i"
        assert formatter.format_real(math.pi) == "3.14159"
