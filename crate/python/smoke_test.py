import json
import math
import os
import tempfile

import reconkit


def main():
    passed, report = reconkit.algebra_check("poly:4")
    assert passed, report
    assert json.loads(report)["passed"] is True
    assert reconkit.algebra_check("phi4")[0]
    assert len(reconkit.structure_hash("phi4")) == 64
    assert json.loads(reconkit.structure_json("poly:2"))["d"] == 1

    l = 10
    f = reconkit.synthetic_field(1, l, 0.7, 1)
    g = reconkit.random_trig(1, l, 6, 2)
    assert len(f) == 1 << l
    pf = reconkit.para(f, g, 1, l)
    pg = reconkit.para(g, f, 1, l)
    r = reconkit.resonant(f, g, 1, l)
    err = max(abs(a * b - x - y - z) for a, b, x, y, z in zip(f, g, pf, pg, r))
    assert err < 1e-11, err

    slope = reconkit.estimate_regularity(reconkit.synthetic_field(1, 12, -0.5, 3), 1, 12)
    assert math.isfinite(slope) and abs(slope + 0.5) < 0.3, slope

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "f.rkf")
        reconkit.write_rkf(path, [f, g], 1, l)
        d, ll, back = reconkit.read_rkf(path)
        assert (d, ll) == (1, l) and back == [f, g]
        try:
            reconkit.read_rkf(os.path.join(tmp, "missing.rkf"))
        except OSError:
            pass
        else:
            raise AssertionError("missing file was read")

        code = reconkit.run(["build-model", "--structure", "poly:3", "--grid", "1,8", "--out", tmp])
        assert code == 0, code
        assert os.path.exists(os.path.join(tmp, "model.json"))
        assert reconkit.run(["algebra-check", "--structure", "poly:4", "--grid", "1,99"]) == 2

    print("smoke test passed")


if __name__ == "__main__":
    main()
