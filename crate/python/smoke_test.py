"""Smoke test for the aitk_py extension module.

Build and install it first, e.g.

    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/aitk_py-*.whl
"""

from fractions import Fraction

import aitk_py


def frac(s):
    return Fraction(s)


def main():
    lo, hi = aitk_py.pow2_neg(1, "2", 12)
    assert (lo, hi) == ("181/256", "2897/4096"), (lo, hi)
    assert frac(lo) ** 2 <= Fraction(1, 2) <= frac(hi) ** 2

    toy = aitk_py.Machine.table([("0", ""), ("10", "")])
    assert toy.terms == 2
    assert toy.kraft_sum() == "3/4"
    assert toy.z_approx("1/2") == ("5/16", "5/16")
    assert toy.phase_table(["1/2", "1"]) == "T,stage,terms,lo,hi\n1/2,2,2,5/16,5/16\n1/1,2,2,3/4,3/4\n"
    assert toy.complexity("") == (1, "0")

    synth = aitk_py.Machine.synthetic(30)
    z1, _ = synth.z_approx("1")
    z2, _ = synth.z_approx("2")
    assert frac(z1) <= Fraction(83, 100) and frac(z2) > 10

    interp = aitk_py.Machine.interpreter()
    interp.step(10_000)
    olo, ohi = interp.omega_bounds()
    assert 0 < frac(olo) <= frac(ohi) <= 1
    again = aitk_py.Machine.from_snapshot(interp.snapshot())
    assert again.omega_bounds() == (olo, ohi)

    fao = aitk_py.Automaton.runlength(0, 2)
    assert fao.states == 3
    assert fao.run("00") == "1" and fao.run("10") == "N"
    report = aitk_py.check_predictability_of(fao, "periodic:100", 100)
    assert report["predictions"] == 33 and report["mispredictions"] == []
    trace = aitk_py.capital_trace(fao, "periodic:100", 100)
    assert frac(trace[-1]) == 2**33

    assert aitk_py.capital_trace("const-zero", "zeros", 10)[-1] == "1024/1"
    assert aitk_py.capital_at("const-zero", "001") == "0/1"
    assert aitk_py.check_predictability_of("const-one", "zeros", 5)["mispredictions"] == [0, 1, 2, 3, 4]

    sample = aitk_py.sequence_prefix("periodic:100", 60)
    assert aitk_py.estimate_runlength_params(sample) == (0, 2)
    assert aitk_py.estimate_runlength_params("1111") is None
    assert aitk_py.check_run_bound("periodic:100", 3, 300) == ("not-violated-up-to", 300)
    assert aitk_py.check_run_bound("zeros", 2, 10) == ("violated", 2)
    print("aitk_py smoke test passed")


if __name__ == "__main__":
    main()
