"""Smoke test for the tefcorr Python bindings."""

import math

import tefcorr


def chain(j):
    return (
        'dimension = 1\nspins = ["0", "1"]\nvacuum = "0"\nrange = 1\n\n'
        f'[[coupling]]\noffset = [1]\nspins = ["1", "1"]\nvalue = {j!r}\n'
    )


def main():
    two = tefcorr.Model.from_toml(chain(math.log(2.0)))
    rho = two.rho_exact("0:1")
    assert abs(rho["(0)=1"] - 3 / 7) < 1e-12, rho
    assert two.equation_residual("0:1") < 1e-12
    assert not two.bounds()["passes"]

    values, report = two.solve("0:1", override_gate=True)
    assert abs(values["(0)=1"] - 3 / 7) < 1e-10
    assert report["iterations"] > 0

    weak = tefcorr.Model.from_toml(chain(0.04))
    assert weak.bounds()["passes"]
    exact = weak.rho_exact("0:5")
    values, report = weak.solve("0:5")
    assert report["gate_passed"]
    assert max(abs(values[k] - exact[k]) for k in values) < 1e-8
    assert weak.epsilon(4) < weak.epsilon(0)
    assert all(ok for _, _, ok in weak.verify(instances=500))

    strong = tefcorr.Model.from_toml(chain(0.2))
    try:
        strong.solve("0:5")
    except tefcorr.NotCertifiedError:
        pass
    else:
        raise AssertionError("ungated solve should be refused")

    lhs, ok = tefcorr.remark1_sufficiency(0.05)
    assert ok and abs(lhs - 0.7761692956973316) < 1e-12
    print(f"tefcorr {tefcorr.__version__}: smoke test passed")


if __name__ == "__main__":
    main()
