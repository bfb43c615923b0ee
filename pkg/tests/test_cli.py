import json

import numpy as np
import pytest

from dpskit.cli import main
from dpskit.operators import identity, operator_to_json, pure_state

BELL = pure_state([1, 0, 0, 1], (2, 2))


@pytest.fixture
def bell_file(tmp_path):
    path = tmp_path / "bell.json"
    path.write_text(operator_to_json(BELL))
    return str(path)


@pytest.fixture
def mixed_file(tmp_path):
    path = tmp_path / "mixed.json"
    path.write_text(operator_to_json(identity((2, 2)) * 0.25))
    return str(path)


@pytest.fixture
def product_file(tmp_path):
    path = tmp_path / "product.json"
    path.write_text(operator_to_json(pure_state([1, 0, 0, 0], (2, 2))))
    return str(path)


class TestMembership:
    def test_bell_infeasible(self, bell_file, tmp_path):
        out = tmp_path / "verdict.json"
        code = main(["membership", "--input", bell_file, "--N", "2", "--out", str(out)])
        assert code == 0
        assert json.loads(out.read_text()) == {"2": "infeasible"}

    def test_mixed_sweep_ppt(self, mixed_file, tmp_path):
        out = tmp_path / "verdict.json"
        code = main(
            ["membership", "--input", mixed_file, "--N", "2..4", "--ppt", "--out", str(out)]
        )
        assert code == 0
        verdicts = json.loads(out.read_text())
        assert verdicts == {"2": "feasible", "3": "feasible", "4": "feasible"}

    def test_malformed_input_exit_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["membership", "--input", str(bad), "--N", "2"]) == 2

    def test_budget_exit_3(self, mixed_file, tmp_path, monkeypatch):
        monkeypatch.setenv("DPSKIT_BUDGET_DIM", "3")
        out = tmp_path / "verdict.json"
        code = main(["membership", "--input", mixed_file, "--N", "2", "--out", str(out)])
        assert code == 3
        assert json.loads(out.read_text()) == {"2": "budget_exceeded"}


class TestBounds:
    def test_twenty_rows_decreasing_g(self, tmp_path):
        out = tmp_path / "bounds.csv"
        code = main(["bounds", "--dB", "2", "--N", "1..20", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "dA,dB,N,gN,pc_sym,pc_ppt,R_sym,R_ppt,dtr_sym,dtr_ppt"
        assert len(lines) == 21
        gs = [float(line.split(",")[3]) for line in lines[1:]]
        assert all(a > b for a, b in zip(gs, gs[1:]))

    def test_delta_adds_columns(self, tmp_path):
        out = tmp_path / "bounds.csv"
        main(["bounds", "--dB", "2", "--N", "1..3", "--delta", "0.1", "--out", str(out)])
        header = out.read_text().splitlines()[0]
        assert header.endswith(
            "reqN_sym,reqN_ppt,log10_ops_sym,log10_ops_ppt,log10_simpl_sym,log10_simpl_ppt"
        )
        row = out.read_text().splitlines()[1].split(",")
        assert row[10] == "19"


class TestSweeps:
    def test_fidelity_bb84_row_count_and_determinism(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["fidelity", "--bb84", "1.0", "--N", "1..2", "--out"]
        assert main(argv + [str(out1)]) == 0
        assert main(argv + [str(out2)]) == 0
        rows1 = out1.read_text().strip().splitlines()
        assert rows1[0] == "N,ppt,upper,lower,status,wall_time_s"
        assert len(rows1) == 5  # 2 N values x both ppt settings
        strip = lambda text: [",".join(r.split(",")[:-1]) for r in text.strip().splitlines()]
        assert strip(out1.read_text()) == strip(out2.read_text())
        # eps = 1 leaves nothing to estimate: upper bound is exactly 1/2
        for row in rows1[1:]:
            assert float(row.split(",")[2]) == pytest.approx(0.5, abs=1e-6)

    def test_fidelity_requires_source(self):
        assert main(["fidelity", "--N", "2"]) == 2

    def test_fidelity_jobs_flag(self, tmp_path):
        out = tmp_path / "par.csv"
        code = main(
            ["fidelity", "--bb84", "1.0", "--N", "1..2", "--jobs", "2", "--out", str(out)]
        )
        assert code == 0
        assert len(out.read_text().strip().splitlines()) == 5

    def test_purity_identity_qubit(self, tmp_path):
        out = tmp_path / "purity.csv"
        code = main(
            ["purity", "--channel", "identity-qubit", "--N", "2", "--ppt", "true",
             "--out", str(out)]
        )
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(1.0, abs=1e-6)

    def test_geometric_ghz(self, tmp_path):
        out = tmp_path / "geo.csv"
        code = main(
            ["geometric", "--state", "ghz", "--N", "2", "--ppt", "true", "--out", str(out)]
        )
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(0.5, abs=1e-3)

    def test_budget_partial_csv(self, tmp_path, monkeypatch):
        monkeypatch.setenv("DPSKIT_BUDGET_DIM", "14")
        out = tmp_path / "partial.csv"
        code = main(["fidelity", "--bb84", "1.0", "--N", "2..3", "--out", str(out)])
        assert code == 3
        rows = out.read_text().strip().splitlines()[1:]
        statuses = [r.split(",")[4] for r in rows]
        assert "budget_exceeded" in statuses
        assert any(s != "budget_exceeded" for s in statuses)


class TestCertifyCommand:
    def test_product_fixture(self, product_file, tmp_path):
        out = tmp_path / "cert.json"
        code = main(["certify", "--input", product_file, "--maxN", "2", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["verdict"] == "separable"
        assert payload["N"] == 2
        assert payload["ranks"] == [1, 1, 1]

    def test_bell_fixture(self, bell_file, tmp_path):
        out = tmp_path / "cert.json"
        code = main(["certify", "--input", bell_file, "--maxN", "2", "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["verdict"] == "entangled"
        w = payload["witness"]
        mat = np.array(w["re"]) + 1j * np.array(w["im"])
        assert float(np.real(np.vdot(mat, BELL.entries))) < -1e-6


class TestFileInputs:
    def test_fidelity_ensemble_file(self, tmp_path):
        # two orthogonal sources with identity encoding: perfect discrimination
        ensemble = {"ensemble": [
            {"p": 0.5,
             "encoded": {"dims": [2], "re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]},
             "source": {"dims": [2], "re": [[1, 0], [0, 0]], "im": [[0, 0], [0, 0]]}},
            {"p": 0.5,
             "encoded": {"dims": [2], "re": [[0, 0], [0, 1]], "im": [[0, 0], [0, 0]]},
             "source": {"dims": [2], "re": [[0, 0], [0, 1]], "im": [[0, 0], [0, 0]]}},
        ]}
        src = tmp_path / "ensemble.json"
        src.write_text(json.dumps(ensemble))
        out = tmp_path / "fid.csv"
        code = main(["fidelity", "--input", str(src), "--N", "2", "--ppt", "true",
                     "--out", str(out)])
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(1.0, abs=1e-6)

    def test_geometric_state_file(self, tmp_path):
        vec = {"dims": [2, 2, 2], "re": [1, 0, 0, 0, 0, 0, 0, 1], "im": [0] * 8}
        src = tmp_path / "ghz.json"
        src.write_text(json.dumps(vec))
        out = tmp_path / "geo.csv"
        code = main(["geometric", "--input", str(src), "--N", "2", "--ppt", "true",
                     "--out", str(out)])
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(0.5, abs=1e-3)

    def test_purity_choi_file(self, tmp_path):
        from dpskit.applications import depolarizing_choi

        src = tmp_path / "choi.json"
        src.write_text(operator_to_json(depolarizing_choi(2, 0.2)))
        out = tmp_path / "purity.csv"
        code = main(["purity", "--choi", str(src), "--N", "2", "--ppt", "true",
                     "--out", str(out)])
        assert code == 0
        row = out.read_text().strip().splitlines()[1].split(",")
        assert float(row[2]) == pytest.approx(0.9, abs=1e-4)

    def test_empty_n_range_rejected(self, tmp_path):
        src = tmp_path / "state.json"
        src.write_text(operator_to_json(identity((2, 2)) * 0.25))
        assert main(["membership", "--input", str(src), "--N", "4..2"]) == 2


def test_complexity_command(tmp_path):
    out = tmp_path / "cx.json"
    code = main(
        ["complexity", "--dA", "2", "--dB", "2", "--delta", "0.1", "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["required_N_sym"] == 19
    assert payload["log10_ops_sym"] == pytest.approx(np.log10(64.0 * 20.0**6))
