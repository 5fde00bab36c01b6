import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from iflab.cli import config_digest, emit_config, main, parse_config
from iflab.errors import NotStronglyConnected, ParseError, ValidationError
from iflab.pwl_core import CPLIFS

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
CANTOR = '{"kind": "cplifs", "maps": [{"breakpoints": [], "slopes": ["1/3"], "tau": 0}, ' \
         '{"breakpoints": [], "slopes": ["1/3"], "tau": "2/3"}]}'


def test_parse_cantor():
    cfg = parse_config(CANTOR)
    assert cfg.kind == "cplifs" and isinstance(cfg.system, CPLIFS)
    assert cfg.system[1].tau == Fraction(2, 3)
    assert cfg.system.is_exact()


def test_parse_errors():
    with pytest.raises(ValidationError, match=r"maps\[0\]"):
        parse_config('{"kind":"cplifs","maps":[{"breakpoints":[0.5],"slopes":[0.3,0.3],"tau":0}]}')
    with pytest.raises(NotStronglyConnected):
        parse_config('{"kind":"gdifs","vertexCount":2,"edges":[{"from":1,"to":2,"r":0.5,"t":0}]}')
    with pytest.raises(ParseError, match="line 1"):
        parse_config('{"kind": ')
    with pytest.raises(ValidationError, match="kind"):
        parse_config('{"kind": "other"}')
    with pytest.raises(ValidationError, match=r"maps\[1\]\.tau"):
        parse_config('{"kind":"cplifs","maps":[{"slopes":[0.3],"tau":0},{"slopes":[0.3]}]}')
    with pytest.raises(ValidationError, match=r"edges\[0\]\.to"):
        parse_config('{"kind":"gdifs","vertexCount":1,"edges":[{"from":1,"to":3,"r":0.5}]}')
    with pytest.raises(ValidationError, match="rational"):
        parse_config('{"kind":"cplifs","maps":[{"slopes":["x"],"tau":0}]}')


@pytest.mark.parametrize("name", ["cantor", "triangle", "injective", "tent", "mauldin_williams"])
def test_round_trip(name):
    cfg = parse_config((CONFIGS / f"{name}.json").read_text())
    again = parse_config(emit_config(cfg))
    if cfg.kind == "cplifs":
        assert again.system == cfg.system
    else:
        for attr in ("src", "dst", "r", "t"):
            assert np.array_equal(getattr(again.system, attr), getattr(cfg.system, attr))
    assert config_digest(again) == config_digest(cfg)


def test_digest_stable_under_key_order():
    a = parse_config(CANTOR)
    doc = json.loads(CANTOR)
    reordered = json.dumps({"maps": [{"tau": m["tau"], "slopes": m["slopes"], "breakpoints": []}
                                     for m in doc["maps"]], "kind": "cplifs"})
    assert config_digest(parse_config(reordered)) == config_digest(a)


def run(tmp_path, *argv):
    out = tmp_path / "report.json"
    code = main([*argv, "--json", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_dim_cantor(tmp_path, capsys):
    code, rep = run(tmp_path, "dim", str(CONFIGS / "cantor.json"), "--depth", "14")
    assert code == 0
    assert rep["results"]["alpha"] == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    assert rep["results"]["sF_direct"] == pytest.approx(math.log(2) / math.log(3), abs=1e-6)
    assert "sF" in capsys.readouterr().out


def test_regularity_cantor(tmp_path):
    code, rep = run(tmp_path, "regularity", str(CONFIGS / "cantor.json"))
    assert code == 0 and rep["results"]["status"] == "Regular" and rep["results"]["order"] == 1


def test_esc_exact(tmp_path):
    code, rep = run(tmp_path, "esc", str(CONFIGS / "cantor.json"), "--exact", "--max-level", "4")
    assert code == 0
    assert [row["minDistance"] for row in rep["results"]["perLevel"]] == ["2/3", "2/9", "2/27", "2/81"]


def test_gdifs_command(tmp_path):
    code, rep = run(tmp_path, "gdifs", str(CONFIGS / "mauldin_williams.json"))
    assert code == 0
    res = rep["results"]
    assert res["h_over_chi"] == pytest.approx(res["alpha"], abs=1e-10)
    assert res["sandwich"]["ok"]
    code, rep = run(tmp_path, "gdifs", str(CONFIGS / "triangle.json"))
    assert code == 0 and rep["results"]["order"] == 1


def test_boxdim_and_validate(tmp_path):
    code, rep = run(tmp_path, "boxdim", str(CONFIGS / "cantor.json"),
                    "--scales", ",".join(f"1/{3 ** k}" for k in range(4, 10)))
    assert code == 0 and abs(rep["results"]["estimate"] - 0.6309) < 0.05
    code, rep = run(tmp_path, "validate", str(CONFIGS / "triangle.json"))
    assert code == 0 and rep["results"]["small"]


def test_scan_csv(tmp_path):
    csv = tmp_path / "scan.csv"
    code = main(["scan", str(CONFIGS / "tent.json"), "--axes", "b1.1,tau1", "--range", "0,1",
                 "--grid", "16", "--csv", str(csv)])
    assert code == 0
    rows = csv.read_text().splitlines()
    assert rows[0] == "i,j,b1.1,tau1,flag" and len(rows) == 257
    flagged = {(int(r.split(",")[0]), int(r.split(",")[1])) for r in rows[1:] if r.endswith("Irregular")}
    assert (8, 5) in flagged  # centre (0.53, 0.34) sits next to tau = 0.7 b


def test_exit_codes(tmp_path, monkeypatch):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind":"cplifs","maps":[{"breakpoints":[0.5],"slopes":[0.3,0.3],"tau":0}]}')
    assert main(["validate", str(bad)]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2
    assert main(["scan", str(CONFIGS / "tent.json"), "--axes", "b9.9,tau1", "--grid", "8"]) == 2
    monkeypatch.setenv("IFLAB_BUDGET", "3")
    # levels beyond the budget are skipped with a warning; only a scan with nothing left fails
    assert main(["esc", str(CONFIGS / "cantor.json"), "--max-level", "4"]) == 0
    assert main(["dim", str(CONFIGS / "cantor.json")]) == 3
    monkeypatch.setenv("IFLAB_BUDGET", "1")
    assert main(["esc", str(CONFIGS / "cantor.json"), "--max-level", "4"]) == 3
    monkeypatch.delenv("IFLAB_BUDGET")
    assert main(["esc", str(CONFIGS / "mauldin_williams.json")]) == 2


def test_reports_byte_identical(tmp_path):
    paths = []
    for n in range(2):
        p = tmp_path / f"r{n}.json"
        assert main(["gdifs", str(CONFIGS / "mauldin_williams.json"), "--json", str(p)]) == 0
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    p = tmp_path / "t.json"
    main(["regularity", str(CONFIGS / "cantor.json"), "--json", str(p), "--timing"])
    assert "timing" in json.loads(p.read_text())
