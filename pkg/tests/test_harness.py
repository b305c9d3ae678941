"""Experiment runner, checkpoints, CSV format, and the CLI front end."""

import math
import os
import pickle

import numpy as np
import pytest

from divlab import cli, harness
from divlab.errors import DataCorruptionError, ParameterError
from divlab.harness import ExperimentConfig


def cfg_for(**kw):
    kw.setdefault("command", "totals")
    return ExperimentConfig(**kw)


def test_config_digest_ignores_runtime_fields():
    a = cfg_for(x=100, out="a.csv", threads=1)
    b = cfg_for(x=100, out="b.csv", threads=8, checkpoint="c.bin",
                stop_after=3)
    c = cfg_for(x=101, out="a.csv")
    assert harness.config_digest(a) == harness.config_digest(b)
    assert harness.config_digest(a) != harness.config_digest(c)


def test_fmt_field_17_digits():
    assert harness.fmt_field(0.3) == "0.29999999999999999"
    assert harness.fmt_field(1.0) == "1"
    assert harness.fmt_field(22) == "22"
    assert harness.fmt_field(None) == ""
    assert float(harness.fmt_field(math.pi)) == math.pi


def test_write_csv_format(tmp_path):
    out = str(tmp_path / "t.csv")
    harness.write_csv(out, ["a", "b"], [(1, 0.5), (None, 2.0)])
    text = open(out, encoding="utf-8").read()
    assert text == "a,b\n1,0.5\n,2\n"
    assert not os.path.exists(out + ".tmp")


def test_checkpoint_roundtrip(tmp_path):
    path = str(tmp_path / "ck.bin")
    digest = harness.config_digest(cfg_for(x=500, out="o.csv"))
    state = {"next": 17, "parts": [1.5, 2.5]}
    harness.save_checkpoint(path, digest, state)
    assert harness.load_checkpoint(path, digest) == state


def test_checkpoint_rejects_other_config(tmp_path):
    path = str(tmp_path / "ck.bin")
    digest = harness.config_digest(cfg_for(x=500, out="o.csv"))
    harness.save_checkpoint(path, digest, {"next": 1})
    with pytest.raises(DataCorruptionError):
        harness.load_checkpoint(
            path, harness.config_digest(cfg_for(x=501, out="o.csv")))
    # runtime-only fields may differ freely
    harness.load_checkpoint(
        path, harness.config_digest(cfg_for(x=500, out="other.csv",
                                            threads=8)))


def test_checkpoint_rejects_corruption(tmp_path):
    path = str(tmp_path / "ck.bin")
    digest = harness.config_digest(cfg_for(x=500, out="o.csv"))
    harness.save_checkpoint(path, digest, {"next": 1})
    raw = open(path, "rb").read()
    open(path, "wb").write(b"XXXX" + raw[4:])
    with pytest.raises(DataCorruptionError):
        harness.load_checkpoint(path, digest)
    open(path, "wb").write(raw[:-3])
    with pytest.raises(DataCorruptionError):
        harness.load_checkpoint(path, digest)


def test_constants_table():
    vals = dict(harness.constants_table())
    assert vals["gamma"] == float(np.euler_gamma)
    assert vals["exp_neg_gamma"] == math.exp(-vals["gamma"])
    assert "%.15g" % vals["exp_neg_gamma"] == "0.561459483566885"
    assert vals["b1_old"] == vals["exp_neg_half_gamma"] / 7
    assert vals["b1_new"] == 2 * vals["exp_neg_half_gamma"]
    assert vals["b2"] == math.sqrt(2) * vals["b1_new"]
    assert vals["b1_old"] < vals["b1_new"] < vals["b2"]
    assert "%.15g" % vals["b2"] == "2.11935741877935"


def run_cli(*argv):
    return cli.main(list(argv))


def test_cli_totals_golden(tmp_path):
    out = str(tmp_path / "t.csv")
    assert run_cli("totals", "--x", "10", "--out", out) == 0
    lines = open(out, encoding="utf-8").read().splitlines()
    assert lines[0] == "x,sum_tau_phi,sum_tau_lambda,ratio,exponent_phi,exponent_lambda"
    assert lines[1] == ("10,25,24,0.95999999999999996,"
                        "0.55146368975774107,0.52689523463939103")


def test_cli_rz_golden(tmp_path):
    out = str(tmp_path / "r.csv")
    assert run_cli("rz", "--x", "50", "--z", "3", "--out", out) == 0
    lines = open(out, encoding="utf-8").read().splitlines()
    assert lines[0] == "experiment,x,z,u,a,B,alpha,beta,value,predicted,ratio"
    assert lines[1] == "rz,50,3,1,,,,,22,,"
    assert lines[2] == "sz,50,3,1,,,,,1.9316973455318793,,"


def test_cli_usage_errors(tmp_path):
    assert run_cli("totals", "--x", "100") == 2  # no --out
    assert run_cli("mc", "--x", "100", "--z", "3", "--r", "0.3", "--v", "2",
                   "--samples", "10", "--out", str(tmp_path / "m.csv")) == 2
    assert run_cli("rz", "--x", "100", "--z", "0.5",
                   "--out", str(tmp_path / "r.csv")) == 2
    assert run_cli("classes", "--x", "100", "--mode", "nope",
                   "--out", str(tmp_path / "c.csv")) == 2


def test_cli_resource_error(tmp_path):
    assert run_cli("rz", "--x", str(5 * 10 ** 9), "--z", "3",
                   "--out", str(tmp_path / "r.csv")) == 3


def test_cli_corrupt_checkpoint(tmp_path):
    ck = str(tmp_path / "ck.bin")
    open(ck, "wb").write(b"garbage")
    assert run_cli("totals", "--x", "100", "--out", str(tmp_path / "t.csv"),
                   "--checkpoint", ck) == 4


def test_cli_checkpoint_config_mismatch(tmp_path):
    ck = str(tmp_path / "ck.bin")
    out = str(tmp_path / "t.csv")
    assert run_cli("totals", "--x", "200000", "--segment-size", "16384",
                   "--out", out, "--checkpoint", ck,
                   "--stop-after-segments", "2") == 0
    assert os.path.exists(ck)
    assert not os.path.exists(out)
    assert run_cli("totals", "--x", "300000", "--segment-size", "16384",
                   "--out", out, "--checkpoint", ck) == 4


def test_cli_interrupt_resume_identical(tmp_path):
    ref = str(tmp_path / "ref.csv")
    out = str(tmp_path / "out.csv")
    ck = str(tmp_path / "ck.bin")
    base = ["totals", "--x", "200000", "--segment-size", "16384"]
    assert run_cli(*base, "--out", ref) == 0
    assert run_cli(*base, "--out", out, "--checkpoint", ck,
                   "--stop-after-segments", "3") == 0
    assert run_cli(*base, "--out", out, "--checkpoint", ck) == 0
    assert open(ref, "rb").read() == open(out, "rb").read()
    assert not os.path.exists(ck)


def test_config_file_precedence(tmp_path):
    conf = tmp_path / "rz.conf"
    conf.write_text("# settings\nx = 1000\nz = 3\nsegment-size = 16384\n")
    out1 = str(tmp_path / "r1.csv")
    out2 = str(tmp_path / "r2.csv")
    assert run_cli("rz", "--config", str(conf), "--out", out1) == 0
    assert "rz,1000,3,1" in open(out1).read()
    # CLI flag beats the file
    assert run_cli("rz", "--config", str(conf), "--x", "50", "--out", out2) == 0
    assert "rz,50,3,1,,,,,22,," in open(out2).read()


def test_config_file_unknown_key(tmp_path):
    conf = tmp_path / "bad.conf"
    conf.write_text("bogus = 1\n")
    assert run_cli("rz", "--config", str(conf), "--x", "50", "--z", "3",
                   "--out", str(tmp_path / "r.csv")) == 2


def test_config_file_parse(tmp_path):
    # raw strings here; typed conversion happens at merge time
    conf = tmp_path / "c.conf"
    conf.write_text("x = 0x10\n# comment\nsnapshots = 4,16\nseed = 9\n")
    parsed = cli.parse_config_file(str(conf))
    assert parsed == {"x": "0x10", "snapshots": "4,16", "seed": "9"}
    assert cli._CONVERTERS["x"]("0x10", "x") == 16
    assert cli._CONVERTERS["snapshots"]("4,16", "snapshots") == (4, 16)


def test_unknown_command_rejected():
    cfg = ExperimentConfig(command="frobnicate", out="x.csv")
    with pytest.raises(ParameterError):
        harness.run(cfg)


def test_atomic_out_on_error(tmp_path):
    # a run that fails validation must not leave an output file
    out = str(tmp_path / "t.csv")
    assert run_cli("rz", "--x", "100", "--z", "0", "--out", out) == 2
    assert not os.path.exists(out)


def test_checkpoint_payload_corruption(tmp_path):
    path = str(tmp_path / "ck.bin")
    digest = harness.config_digest(cfg_for(x=500, out="o.csv"))
    harness.save_checkpoint(path, digest, {"next": 1})
    raw = bytearray(open(path, "rb").read())
    raw[-1] ^= 0x5A
    open(path, "wb").write(bytes(raw))
    with pytest.raises(DataCorruptionError):
        harness.load_checkpoint(path, digest)


def test_checkpoint_version_gate(tmp_path):
    path = str(tmp_path / "ck.bin")
    digest = harness.config_digest(cfg_for(x=500, out="o.csv"))
    harness.save_checkpoint(path, digest, {"next": 1})
    raw = bytearray(open(path, "rb").read())
    raw[4:8] = (99).to_bytes(4, "little")
    open(path, "wb").write(bytes(raw))
    with pytest.raises(DataCorruptionError):
        harness.load_checkpoint(path, digest)


def test_mc_rows_reference_values(tmp_path, table_1e4):
    out = str(tmp_path / "m.csv")
    assert run_cli("mc", "--x", "10000", "--z", "3", "--r", "0.3", "--v", "2",
                   "--samples", "2000", "--seed", "42", "--q", "5",
                   "--out", out) == 0
    lines = open(out).read().splitlines()
    byname = {ln.split(",")[0]: ln.split(",") for ln in lines[1:]}
    from divlab import ensemble
    tbl = ensemble.build_slice_table(10 ** 4, 3.0, 0.3, t=table_1e4)
    assert float(byname["s0"][9]) == ensemble.s_frak(2, tbl)
    # X_5 reference pmf is binomial(2, 2/5)
    assert float(byname["xq_q5_k0"][9]) == pytest.approx(0.36)
    assert float(byname["xq_q5_k1"][9]) == pytest.approx(0.48)


def test_sieve_roundtrip_via_cli(tmp_path):
    from divlab import arith
    out = str(tmp_path / "t.spf")
    assert run_cli("sieve", "--x", "50000", "--out", out) == 0
    t = arith.load_spf(out)
    assert (t.lo, t.hi) == (2, 50001)
