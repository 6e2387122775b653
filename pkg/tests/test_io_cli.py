import io
import json
from fractions import Fraction

import numpy as np
import pytest

from helpers import rand_bimeasure, rand_model
from qidm import __version__
from qidm.cli import main
from qidm.integral import StepFunction
from qidm.io import (
    dump_bimeasure,
    dump_measures,
    dump_model,
    dump_pmf,
    dump_step_function,
    dumps,
    load_bimeasure,
    load_measures,
    load_model,
    load_pmf,
    load_step_function,
    to_csv,
    triplet_from_json,
    triplet_to_json,
)
from qidm.lattice import LatticePmf, extract_triplet_lattice
from qidm.measure import FiniteSignedMeasure


def reparse(doc):
    return json.loads(dumps(doc))


def test_bimeasure_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        bm = rand_bimeasure(rng, 3, 4)
        back = load_bimeasure(reparse(dump_bimeasure(bm)))
        assert back.matrix() == bm.matrix() and back.t_space == bm.t_space


def test_model_and_measure_round_trip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rand_model(rng)
        back = load_model(reparse(dump_model(m)))
        assert back == m
        space, ms = load_measures(reparse(dump_measures(m.space, {"nu0": m.nu0})))
        assert ms["nu0"].same_as(m.nu0)


def test_pmf_triplet_and_integrand_round_trip():
    pmf = LatticePmf((0, 1, 3), (0.6, 0.3, 0.1))
    assert load_pmf(reparse(dump_pmf(pmf))) == pmf
    trip, _ = extract_triplet_lattice(pmf)
    assert triplet_from_json(reparse(triplet_to_json(trip))) == trip
    m = rand_model(np.random.default_rng(2), n=3)
    f = StepFunction.from_values(m.space, {m.space.atoms[0]: Fraction(1, 3), m.space.atoms[2]: -2})
    back = load_step_function(reparse(dump_step_function(f)), m.space)
    assert back.values() == f.values()


def test_csv_formatting():
    text = to_csv(("a", "b", "c"), [(Fraction(1, 3), 0.1, "x")])
    assert text == "a,b,c\n1/3,0.10000000000000001,x\n"


@pytest.fixture
def files(tmp_path):
    def write(name, doc):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return {
        "bm": write("bm.json", {"t_atoms": ["t1", "t2"], "t_levels": [[0], [0, 1]], "x_atoms": ["x1", "x2"], "matrix": [[1, -1], [2, 0]]}),
        "bern03": write("bern03.json", {"offsets": [0, 1], "probs": [0.7, 0.3]}),
        "bern05": write("bern05.json", {"offsets": [0, 1], "probs": [0.5, 0.5]}),
        "near": write("near.json", {"offsets": [0, 1], "probs": [0.5 + 5e-11, 0.5 - 5e-11]}),
        "offlattice": write("off.json", {"offsets": [0, 0.5], "probs": [0.7, 0.3]}),
        "bad": write("bad.json", {"offsets": [0, 1], "probs": [0.7, 0.7]}),
        "model": write(
            "model.json",
            {"space": {"atoms": ["a", "b"], "levels": [[0], [0, 1]]}, "nu0": {"a": 1}, "nu1": {"b": "1/2"}, "F": {"a": [[1, 1]]}},
        ),
        "f": write("f.json", {"values": {"a": 2, "b": -1}}),
        "dir": tmp_path,
    }


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def test_disintegrate_writes_csvs_and_manifest(files):
    out = files["dir"] / "k"
    code, _, _ = run(["disintegrate", "--in", files["bm"], "--out", str(out)])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["kernel.csv", "manifest.json", "nu.csv", "residuals.csv"]
    assert (out / "nu.csv").read_text() == "t_atom,nu\nt1,2\nt2,2\n"
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool_version"] == __version__ and manifest["residuals"]["reconstruction_max_abs"] == "0"


def test_manifest_is_deterministic(files):
    a, b = files["dir"] / "a", files["dir"] / "b"
    for d in (a, b):
        assert run(["disintegrate", "--in", files["bm"], "--out", str(d)])[0] == 0
    for name in ("kernel.csv", "nu.csv", "residuals.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["config_hash"] == mb["config_hash"]


def test_qid_check_exit_codes(files):
    code, out, _ = run(["qid-check", "--pmf", files["bern03"]])
    assert code == 0 and json.loads(out)["is_qid"] is True
    code, out, _ = run(["qid-check", "--pmf", files["bern05"]])
    assert code == 0 and json.loads(out)["is_qid"] is False
    assert run(["qid-check", "--pmf", files["near"]])[0] == 3
    assert run(["qid-check", "--pmf", files["bad"]])[0] == 2
    assert run(["qid-check", "--pmf", files["offlattice"]])[0] == 3
    assert run(["extract-triplet", "--pmf", files["bern05"]])[0] == 2


def test_usage_errors(files):
    code, _, err = run(["qid-check", "--pmf", files["bern03"], "--bogus"])
    assert code == 64 and "usage:" in err
    assert run([])[0] == 64
    assert run(["nope"])[0] == 64


def test_extract_triplet_outputs_reingest(files):
    out = files["dir"] / "t"
    assert run(["extract-triplet", "--pmf", files["bern03"], "--out", str(out)])[0] == 0
    trip = triplet_from_json(json.loads((out / "triplet.json").read_text()))
    assert trip.levy.mass(1) == pytest.approx(3 / 7, abs=1e-12)
    header = (out / "cf.csv").read_text().splitlines()[0]
    assert header == "theta,re_cf,im_cf,abs_cf"


def test_model_and_integral_commands(files):
    code, out, _ = run(["model", "validate", "--model", files["model"]])
    assert code == 0 and json.loads(out)["modulus_screen_passed"] is True
    target = files["dir"] / "cf.csv"
    assert run(["model", "cf", "--model", files["model"], "--out", str(target)])[0] == 0
    assert target.read_text().startswith("theta,re_cf,im_cf,abs_cf,two_path_residual\n")
    assert (files["dir"] / "cf.csv.manifest.json").exists()
    code, out, _ = run(["model", "sample", "--model", files["model"], "--samples", "10", "--seed", "4"])
    assert code == 0 and len(out.splitlines()) == 11
    code, out, _ = run(["integrate", "--model", files["model"], "--f", files["f"], "--p", "0"])
    law = json.loads(out)
    assert code == 0 and law["two_path_residual"] < 1e-10 and law["F_f"] == [["2", "1"]]
    code, out, _ = run(["orlicz", "--model", files["model"], "--f", files["f"]])
    assert code == 0 and json.loads(out)["f_norm"] > 0
    code, out, _ = run(["probe", "--model", files["model"], "--f", files["f"]])
    assert code == 0 and out.startswith("n,norm,phi_integral,cf_dev\n")


def test_decompose_json_reingests(files, tmp_path):
    doc = {"atoms": ["a", "b"], "levels": [[0, 1]], "measures": {"mu": {"a": "1/2", "b": -2}}}
    p = tmp_path / "m.json"
    p.write_text(json.dumps(doc))
    code, out, _ = run(["decompose", "--in", str(p)])
    assert code == 0
    res = json.loads(out)
    space, ms = load_measures(res["input"])
    assert ms["mu"].same_as(FiniteSignedMeasure(space, {"a": Fraction(1, 2), "b": -2}))
    assert res["jordan"]["mu"]["total_variation_by_level"] == ["5/2"]
