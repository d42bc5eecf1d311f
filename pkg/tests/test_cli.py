import json
import os
import sys

import numpy as np
import pytest

# Add project root to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from src.greens.export import kernel_to_csv
from src.greens.kernel import greens_kernel
from src.main import EXIT_FAILURE, EXIT_OK, EXIT_USAGE, RunConfig, dispatch, main
from src.solvers.bvp import BvpSpec


@pytest.fixture
def q_file(tmp_path):
    path = tmp_path / "q.csv"
    path.write_text("n,value\n1,0.001\n2,0.002\n3,0.0\n4,-0.001\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def h_file(tmp_path):
    path = tmp_path / "h.csv"
    path.write_text("n,value\n1,1.0\n2,-0.5\n3,0.25\n4,0.0\n", encoding="utf-8")
    return str(path)


def run(capsys, *argv):
    code = main(list(argv))
    return code, capsys.readouterr().out


def test_greens_csv_matches_kernel(capsys):
    code, out = run(capsys, "greens", "--nu", "2.5", "--a", "0", "--b", "4", "--k", "2", "--j", "0", "--format", "csv")
    assert code == EXIT_OK
    kernel = greens_kernel(BvpSpec(nu=2.5, a=0, b=4, k=2, j_orders=(0,)))
    assert out == kernel_to_csv(kernel)


def test_greens_closed_form_json(capsys):
    code, out = run(capsys, "greens", "--nu", "2", "--b", "3", "--j", "0", "--closed-form")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["sign"] == -1
    # t = 1 is row 2 (rows start at t = -1), s = 2 is column 1
    assert doc["table"][2][1] == pytest.approx(1.0)


def test_lyapunov_report(capsys, q_file):
    code, out = run(capsys, "lyapunov", "--nu", "2.5", "--a", "0", "--b", "4", "--variant", "conjugate_A", "--q", q_file)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["threshold"] == pytest.approx(0.0304762, rel=1e-5)
    assert doc["q_integral"] == pytest.approx(0.004)
    assert doc["nontrivial_exists"] is False


def test_lyapunov_csv(capsys, q_file):
    code, out = run(capsys, "lyapunov", "--nu", "2.5", "--b", "4", "--variant", "focal_H2", "--q", q_file, "--format", "csv")
    assert code == EXIT_OK
    header, row = out.strip().split("\n")
    assert header.startswith("nu,N,a,b,pattern")
    assert row.split(",")[4] == "r1:L"


def test_eval_scalars(capsys):
    code, out = run(capsys, "eval", "--op", "rising", "--t", "3", "--r", "2")
    assert code == EXIT_OK and json.loads(out)["value"] == 12.0
    code, out = run(capsys, "eval", "--op", "taylor", "--nu", "2", "--t", "4", "--s", "0")
    assert json.loads(out)["value"] == pytest.approx(10.0)


def test_eval_grid_functions(capsys, h_file):
    code, out = run(capsys, "eval", "--op", "frac-sum", "--nu", "1", "--input", h_file)
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["values"][-4:] == pytest.approx([1.0, 0.5, 0.75, 0.75])
    code, out = run(capsys, "eval", "--op", "integral", "--input", h_file, "--c", "0", "--d", "4")
    assert json.loads(out)["value"] == pytest.approx(0.75)
    code, out = run(capsys, "eval", "--op", "nabla-diff", "--order", "1", "--input", h_file, "--format", "csv")
    assert out.splitlines()[0] == "n,value"
    assert out.splitlines()[1] == "2,-1.5"


def test_solve_ivp(capsys):
    code, out = run(capsys, "solve-ivp", "--nu", "1.5", "--b", "4", "--initial-values", "1,2")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["lo"] == -1
    assert doc["values"] == pytest.approx([1 + 2 * t for t in range(-1, 5)])


@pytest.mark.parametrize("method", ["greens", "full"])
def test_solve_bvp_methods_agree(capsys, h_file, method):
    base = ["solve-bvp", "--nu", "2.5", "--b", "4", "--k", "1", "--j", "0,1", "--h", h_file]
    _, direct = run(capsys, *base)
    code, other = run(capsys, *base, "--method", method)
    assert code == EXIT_OK
    np.testing.assert_allclose(json.loads(other)["values"], json.loads(direct)["values"], rtol=1e-9, atol=1e-12)


def test_greens_method_refuses_boundary_data(capsys, h_file):
    code, out = run(capsys, "solve-bvp", "--nu", "2.5", "--b", "4", "--k", "1", "--j", "0,1",
                    "--right", "1,0", "--h", h_file, "--method", "greens")
    assert code == EXIT_USAGE
    assert out == ""


@pytest.mark.parametrize("argv", [
    ["lyapunov", "--nu", "2.5", "--b", "4"],
    ["solve-bvp", "--nu", "2.5", "--b", "4", "--k", "0", "--j", "0,1,2"],
    ["solve-bvp", "--nu", "2.5", "--b", "4.5", "--k", "1", "--j", "0,1"],
    ["greens", "--nu", "2.5", "--b", "4"],
    ["eval", "--op", "caputo", "--nu", "1.5", "--input", "/no/such/file.csv"],
    ["verify", "--only", "no_such_suite"],
    ["solve-ivp", "--nu", "1.5", "--b", "4", "--initial-values", "1"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, out = run(capsys, *argv)
    assert code == EXIT_USAGE
    assert out == ""


def test_ingest_error_exit_2(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("n,value\n1,1.0\n1,2.0\n", encoding="utf-8")
    code = main(["eval", "--op", "caputo", "--nu", "1.5", "--input", str(bad)])
    captured = capsys.readouterr()
    assert code == EXIT_USAGE
    assert "row 3" in captured.err


def test_argparse_rejects_unknown_subcommand():
    with pytest.raises(SystemExit) as e:
        main(["plot"])
    assert e.value.code == 2


def test_dispatch_takes_a_config():
    code, out = dispatch(RunConfig(subcommand="eval", op="rising", t=5, r=-2))
    assert code == EXIT_OK
    assert json.loads(out)["value"] == pytest.approx(1 / 12)


def test_verify_quick_is_deterministic(capsys):
    argv = ["verify", "--seed", "7", "--scale", "quick", "--only", "operator_identities,closed_form"]
    code1, out1 = run(capsys, *argv)
    code2, out2 = run(capsys, *argv, "--parallel")
    assert code1 == code2 == EXIT_OK
    assert out1 == out2
    doc = json.loads(out1)
    assert doc["ok"] is True
    assert doc["seed"] == 7
    assert [s["name"] for s in doc["suites"]] == ["operator_identities", "closed_form"]


def test_refutation_exit_code(capsys, q_file, monkeypatch):
    import src.main as cli

    original = cli.lyapunov_report

    def refuting(*args, **kwargs):
        return original(*args, **kwargs).model_copy(update={"nontrivial_exists": True, "inequality_holds": False})

    monkeypatch.setattr(cli, "lyapunov_report", refuting)
    code, out = run(capsys, "lyapunov", "--nu", "2.5", "--b", "4", "--variant", "conjugate_A", "--q", q_file)
    assert code == EXIT_FAILURE
    assert json.loads(out)["inequality_holds"] is False


def test_tolerance_overrides_last_one_run(capsys):
    from src.core.config import get_settings

    before = (get_settings().rel_tol, get_settings().rank_tol)
    code, _ = run(capsys, "eval", "--op", "rising", "--t", "3", "--r", "2", "--rel-tol", "0.5", "--rank-tol", "0.25")
    assert code == EXIT_OK
    assert (get_settings().rel_tol, get_settings().rank_tol) == before
    run(capsys, "eval", "--op", "rising", "--t", "3", "--r", "2")
    assert get_settings().rel_tol == before[0]


def test_overrides_are_visible_during_the_run_and_restored_on_error(capsys, monkeypatch):
    import src.main as cli
    from src.core.config import get_settings
    from src.core.errors import InadmissibleSpec

    before = get_settings().rel_tol
    seen = []

    def failing(config):
        seen.append(get_settings().rel_tol)
        raise InadmissibleSpec("boom")

    monkeypatch.setitem(cli.HANDLERS, "eval", failing)
    code, out = run(capsys, "eval", "--op", "rising", "--t", "3", "--r", "2", "--rel-tol", "0.5")
    assert code == EXIT_USAGE and out == ""
    assert seen == [0.5]
    assert get_settings().rel_tol == before
