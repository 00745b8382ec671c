import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from splitgibbs.errors import FormatError
from splitgibbs.experiments import EstimateBundle
from splitgibbs.io import RAW_MAGIC, read_image, write_aggregate, write_image, write_pgm, write_raw, write_report
from splitgibbs.rng import RandomStream, make_rng
from splitgibbs.samplers import ChainRecord, RunningMoments


@pytest.mark.parametrize("header", [b"P5\n2 2\n255\n", b"P5 # comment\n2 2\n# another\n255\n"])
def test_hand_built_p5(tmp_path, header):
    p = tmp_path / "a.pgm"
    p.write_bytes(header + bytes([0, 64, 128, 255]))
    np.testing.assert_array_equal(read_image(p), [[0.0, 64.0], [128.0, 255.0]])


def test_pgm_rejects_bad_headers(tmp_path):
    p = tmp_path / "b.pgm"
    for data in (b"P5\n2 2\n65535\n" + bytes(8), b"P5\n2 2\n255\n" + bytes(3), b"P2\n1 1\n255\n0",
                 b"P5\n2 x\n255\n" + bytes(4)):
        p.write_bytes(data)
        with pytest.raises(FormatError):
            read_image(p)


def test_pgm_write_clamps_and_rounds_half_even(tmp_path):
    p = tmp_path / "c.pgm"
    write_pgm(p, np.array([[-3.0, 0.5, 1.5, 2.5], [254.5, 255.2, 300.0, 127.49]]))
    np.testing.assert_array_equal(read_image(p), [[0, 0, 2, 2], [254, 255, 255, 127]])
    assert p.read_bytes().startswith(b"P5\n4 2\n255\n")


def test_raw_layout(tmp_path):
    p = tmp_path / "d.raw"
    write_raw(p, np.array([[1.0, -2.5, 3.0]]))
    data = p.read_bytes()
    assert data[:8] == RAW_MAGIC
    assert np.frombuffer(data[8:24], "<u8").tolist() == [1, 3]
    assert np.frombuffer(data[24:], "<f8").tolist() == [1.0, -2.5, 3.0]
    p.write_bytes(data[:-1])
    with pytest.raises(FormatError):
        read_image(p)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(allow_nan=False, allow_infinity=False)))
def test_raw_round_trip_bit_identical(field):
    import tempfile
    from pathlib import Path

    with tempfile.TemporaryDirectory() as d:
        p = Path(d) / "f.bin"
        write_image(p, field)
        back = read_image(p)
    assert back.tobytes() == field.astype("<f8").tobytes()


def test_random_stream_contract():
    a = make_rng(123, 4).standard_normal(5)
    b = RandomStream(123, 4).generator().standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, make_rng(123, 5).standard_normal(5))
    assert RandomStream(1).child(7) == RandomStream(1, 7)
    with pytest.raises(ValueError):
        RandomStream(1, -1)
    # frozen reference values pin the generator family across releases
    np.testing.assert_allclose(make_rng(0, 0).standard_normal(2), FROZEN_DRAWS, rtol=0, atol=0)


FROZEN_DRAWS = [-0.8025458906390128, 0.45751928097784245]  # Philox, seed 0, stream 0


def _record(t_mc=5, t_bi=2, kept=True):
    rm = RunningMoments()
    samples = []
    for t in range(t_bi, t_mc):
        s = np.full((2, 2), float(t))
        rm.update(s)
        samples.append(s)
    return ChainRecord(np.arange(t_mc, dtype=float) ** 1.5, rm, RunningMoments(), RunningMoments(),
                       np.stack(samples) if kept else None, t_mc, t_bi)


def test_write_report_files(tmp_path):
    rec = _record()
    b = EstimateBundle(mmse_x=np.ones((2, 2)), ci_low=np.zeros((2, 2)), ci_high=np.full((2, 2), 2.0),
                       metrics={"snr_x": 1.25})
    files = {f.name for f in write_report(b, rec, tmp_path / "r")}
    assert {"metrics.csv", "trace.csv", "acf.csv", "mmse_x.pgm", "mmse_x.raw", "ci_low.pgm",
            "ci_high.raw"} <= files
    acf_lines = (tmp_path / "r" / "acf.csv").read_text().splitlines()
    assert acf_lines[0] == "lag,value" and acf_lines[1] == "0,1.0"
    trace = (tmp_path / "r" / "trace.csv").read_text().splitlines()
    assert trace[0] == "sweep,neg_log_posterior" and len(trace) == 6
    metrics = (tmp_path / "r" / "metrics.csv").read_text()
    assert "snr_x,1.25" in metrics and "n_kept,3" in metrics


def test_write_report_without_samples(tmp_path):
    rec = _record(kept=False)
    b = EstimateBundle(mmse_x=np.ones((2, 2)))
    files = {f.name for f in write_report(b, rec, tmp_path)}
    assert "metrics.csv" in files
    assert not any(n.startswith("ci_") for n in files)


def test_write_report_is_deterministic(tmp_path):
    b = EstimateBundle(mmse_x=np.ones((2, 2)), metrics={"a": 0.1, "b": 2})
    write_report(b, _record(), tmp_path / "1")
    write_report(b, _record(), tmp_path / "2")
    for name in ("metrics.csv", "trace.csv", "acf.csv", "mmse_x.raw"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_write_report_surfaces_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_report(EstimateBundle(mmse_x=np.ones((2, 2))), None, blocker / "sub")


def test_aggregate_mean_std(tmp_path):
    vals = list(np.linspace(1.0, 25.0, 25))
    write_aggregate(tmp_path / "agg.csv", {"isnr": vals, "snr": [2.0] * 25})
    lines = (tmp_path / "agg.csv").read_text().splitlines()
    assert lines[0] == "name,mean,std,n"
    name, mean, std, n = lines[1].split(",")
    assert name == "isnr" and float(mean) == 13.0 and int(n) == 25
    assert float(std) == pytest.approx(np.std(vals, ddof=1))
    assert lines[2] == "snr,2.0,0.0,25"
