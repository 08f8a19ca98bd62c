"""File-format oracles and end-to-end command-line behavior."""

import math
import struct
from types import SimpleNamespace

import numpy as np
import pytest

from radargest.classify import ClassifierConfig
from radargest.cli import main as cli_main
from radargest.errors import ConfigError, DataFormatError
from radargest.io import (
    CSV_HEADER,
    format_metrics_row,
    load_checkpoint,
    load_dataset,
    parse_run_config,
    run_config_keys,
    save_checkpoint,
    save_dataset,
    write_map_csv,
    write_metrics_csv,
    write_pgm,
)
from radargest.simulate import ComplexCube
from radargest.sr import SafmnConfig
from radargest.training import MetricsRecord, TrainConfig

# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------


def _sample_records(rng_seed=0, shape=(2, 4, 6), count=3):
    rng = np.random.default_rng(rng_seed)
    records = []
    for i in range(count):
        data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        records.append((ComplexCube(data), i % 2))
    return records


def test_dataset_value_roundtrip(tmp_path):
    path = tmp_path / "d.rgc"
    records = _sample_records()
    save_dataset(path, records)
    loaded, header = load_dataset(path)
    assert (header.k, header.m, header.n) == (2, 4, 6)
    assert header.num_records == 3 and header.num_classes == 2
    for (cube, label), (orig, orig_label) in zip(loaded, records):
        assert label == orig_label
        # disk precision is float32 per component
        want = orig.data.astype(np.complex64).astype(np.complex128)
        assert np.array_equal(cube.data, want)


def test_dataset_file_roundtrip_bit_exact(tmp_path):
    a, b = tmp_path / "a.rgc", tmp_path / "b.rgc"
    save_dataset(a, _sample_records())
    loaded, header = load_dataset(a)
    save_dataset(b, loaded, num_classes=header.num_classes)
    assert a.read_bytes() == b.read_bytes()


def test_dataset_header_layout(tmp_path):
    path = tmp_path / "d.rgc"
    save_dataset(path, _sample_records(shape=(2, 4, 6), count=3))
    blob = path.read_bytes()
    magic, version, k, m, n, num, classes = struct.unpack_from("<4sHHHHIH", blob)
    assert magic == b"RGC1" and version == 1
    assert (k, m, n, num, classes) == (2, 4, 6, 3, 2)
    assert len(blob) == 18 + 3 * (2 + 2 * 4 * 6 * 8)


def test_dataset_size_formula_full_cube(tmp_path):
    path = tmp_path / "one.rgc"
    cube = ComplexCube(np.zeros((5, 32, 492), dtype=np.complex128))
    save_dataset(path, [(cube, 0)], num_classes=1)
    assert path.stat().st_size == 18 + 2 + 5 * 32 * 492 * 8 == 629_780


def test_dataset_empty_roundtrip(tmp_path):
    path = tmp_path / "empty.rgc"
    save_dataset(path, [], num_classes=0, dims=(2, 4, 6))
    loaded, header = load_dataset(path)
    assert loaded == [] and header.num_records == 0
    with pytest.raises(ValueError):
        save_dataset(tmp_path / "x.rgc", [])


def test_dataset_save_validation(tmp_path):
    records = _sample_records()
    with pytest.raises(ValueError):
        save_dataset(tmp_path / "x.rgc", records, num_classes=1)  # label 1 out of range
    mixed = records + [(ComplexCube(np.zeros((1, 2, 3))), 0)]
    with pytest.raises(ValueError):
        save_dataset(tmp_path / "x.rgc", mixed)


def _valid_dataset_bytes(tmp_path):
    path = tmp_path / "v.rgc"
    save_dataset(path, _sample_records())
    return path, bytearray(path.read_bytes())


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda blob: blob[:10],  # truncated header
        lambda blob: b"XGC1" + blob[4:],  # bad magic
        lambda blob: blob[:4] + struct.pack("<H", 2) + blob[6:],  # bad version
        lambda blob: blob[:-1],  # payload shorter than header implies
        lambda blob: blob + b"\x00",  # trailing byte
        lambda blob: blob[:18] + struct.pack("<H", 9) + blob[20:],  # label >= classes
        lambda blob: blob[:20] + struct.pack("<f", math.nan) + blob[24:],  # non-finite
    ],
)
def test_dataset_corruption_detected(tmp_path, corrupt):
    path, blob = _valid_dataset_bytes(tmp_path)
    path.write_bytes(bytes(corrupt(bytes(blob))))
    with pytest.raises(DataFormatError):
        load_dataset(path)


# ---------------------------------------------------------------------------
# Checkpoint files
# ---------------------------------------------------------------------------


def _f32_state(rng_seed=0):
    rng = np.random.default_rng(rng_seed)
    return {
        "sr.shallow.w": rng.standard_normal((3, 2, 3, 3)).astype(np.float32).astype(np.float64),
        "classifier.head.b": rng.standard_normal(5).astype(np.float32).astype(np.float64),
        "scalar": np.float64(2.5),
    }


def test_checkpoint_roundtrip_bit_exact(tmp_path):
    path = tmp_path / "c.ckpt"
    state = _f32_state()
    save_checkpoint(path, state)
    loaded = load_checkpoint(path)
    assert list(loaded) == list(state)  # order preserved
    for name in state:
        got = loaded[name]
        assert got.dtype == np.float64
        assert np.array_equal(got, np.asarray(state[name]))
    second = tmp_path / "c2.ckpt"
    save_checkpoint(second, loaded)
    assert path.read_bytes() == second.read_bytes()


def test_checkpoint_quantizes_to_float32(tmp_path):
    path = tmp_path / "c.ckpt"
    arr = np.array([1 / 3, math.pi])
    save_checkpoint(path, {"a": arr})
    got = load_checkpoint(path)["a"]
    assert np.array_equal(got, arr.astype(np.float32).astype(np.float64))
    assert not np.array_equal(got, arr)


def test_checkpoint_header_layout(tmp_path):
    path = tmp_path / "c.ckpt"
    save_checkpoint(path, {"ab": np.zeros((2, 3))})
    blob = path.read_bytes()
    magic, version, count = struct.unpack_from("<4sHI", blob)
    assert magic == b"RGCK" and version == 1 and count == 1
    name_len, = struct.unpack_from("<H", blob, 10)
    assert name_len == 2 and blob[12:14] == b"ab"
    assert blob[14] == 2  # rank
    assert struct.unpack_from("<II", blob, 15) == (2, 3)
    assert len(blob) == 10 + 2 + 2 + 1 + 8 + 6 * 4


@pytest.mark.parametrize(
    "corrupt",
    [
        lambda blob: blob[:5],
        lambda blob: b"XGCK" + blob[4:],
        lambda blob: blob[:4] + struct.pack("<H", 7) + blob[6:],
        lambda blob: blob[:-2],
        lambda blob: blob + b"\x00\x00",
    ],
)
def test_checkpoint_corruption_detected(tmp_path, corrupt):
    path = tmp_path / "c.ckpt"
    save_checkpoint(path, _f32_state())
    path.write_bytes(bytes(corrupt(path.read_bytes())))
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


def test_checkpoint_duplicate_names_rejected(tmp_path):
    entry = struct.pack("<H", 1) + b"a" + struct.pack("<B", 1) + struct.pack("<I", 1)
    entry += struct.pack("<f", 1.0)
    path = tmp_path / "dup.ckpt"
    path.write_bytes(struct.pack("<4sHI", b"RGCK", 1, 2) + entry + entry)
    with pytest.raises(DataFormatError):
        load_checkpoint(path)


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------


def test_metrics_row_format():
    record = MetricsRecord(
        epoch=3,
        regime="joint",
        d=2,
        gamma=1.0,
        accuracy=0.5,
        l1=0.125,
        ms_ssim=0.875,
        psnr=math.inf,
        ce_loss=0.25,
        sr_loss=0.125,
    )
    assert format_metrics_row(record) == "3,joint,2,1.0,0.5,0.125,0.875,inf,0.25,0.125"


def test_metrics_csv_contents(tmp_path):
    path = tmp_path / "m.csv"
    record = MetricsRecord(
        epoch=0, regime="cubic", d=4, gamma=0.0, accuracy=0.25, l1=0.5,
        ms_ssim=0.5, psnr=10.0, ce_loss=1.5, sr_loss=0.5,
    )
    write_metrics_csv(path, [record])
    lines = path.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[1] == format_metrics_row(record)
    assert len(lines) == 2


# ---------------------------------------------------------------------------
# Map images
# ---------------------------------------------------------------------------


def test_pgm_normalization_and_layout(tmp_path):
    path = tmp_path / "f.pgm"
    write_pgm(path, np.arange(6, dtype=np.float64).reshape(2, 3))
    blob = path.read_bytes()
    header = b"P5\n3 2\n65535\n"
    assert blob.startswith(header)
    values = np.frombuffer(blob[len(header):], dtype=">u2")
    assert values.tolist() == [0, 13107, 26214, 39321, 52428, 65535]


def test_pgm_constant_frame_is_zero(tmp_path):
    path = tmp_path / "z.pgm"
    write_pgm(path, np.full((3, 4), 7.5))
    blob = path.read_bytes()
    values = np.frombuffer(blob[len(b"P5\n4 3\n65535\n"):], dtype=">u2")
    assert values.tolist() == [0] * 12


def test_map_csv_raw_values(tmp_path):
    path = tmp_path / "f.csv"
    write_map_csv(path, np.array([[0.0, 1.5], [2.25, 3.0]]))
    assert path.read_text() == "0.0,1.5\n2.25,3.0\n"


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


def test_run_config_defaults():
    config = parse_run_config("")
    assert config.train == TrainConfig()
    assert config.sr == SafmnConfig()
    assert config.classifier == ClassifierConfig()


def test_run_config_parses_all_value_kinds():
    text = """
    # training
    regime = multi
    d_s = 3
    d_f = 3
    gamma = 0.5

    sr_base_channels = 8
    sr_use_bias = false
    cls_num_classes = 4
    cls_cnn_channels = 4,8
    cls_tcn_dilations = 1,2,4
    """
    config = parse_run_config(text)
    assert config.train.regime == "multi" and config.train.d_s == 3
    assert config.train.gamma == 0.5
    assert config.sr.base_channels == 8 and config.sr.use_bias is False
    assert config.classifier.num_classes == 4
    assert config.classifier.cnn_channels == (4, 8)
    assert config.classifier.tcn_dilations == (1, 2, 4)


@pytest.mark.parametrize(
    "text",
    [
        "bogus=1",
        "sr_ds=4",  # scale factors come from d_s/d_f, not the SR section
        "epochs=1\nepochs=2",
        "epochs",
        "epochs=1.5",
        "sr_use_bias=maybe",
        "regime=recursive\nd_s=3\nd_f=3",  # invalid combo caught by validation
    ],
)
def test_run_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_run_config(text)


def test_run_config_schema_is_flat_and_complete():
    keys = run_config_keys()
    assert "epochs" in keys and "d_s" in keys and "noise_sigma_rel" in keys
    assert "sr_base_channels" in keys and "cls_num_classes" in keys
    assert "sr_ds" not in keys and "sr_df" not in keys
    assert keys["regime"] == "str" and keys["cls_tcn_dilations"] == "tuple of ints"


# ---------------------------------------------------------------------------
# CLI: shared artifacts
# ---------------------------------------------------------------------------

RUN_CONFIG = """\
regime = joint
epochs = 1
batch_size = 4
learning_rate = 0.003
rng_seed = 5
gamma = 1.0
d_s = 2
d_f = 2
noise_sigma_rel = 0.05
sr_base_channels = 4
sr_num_fmm_blocks = 1
cls_num_classes = 2
cls_cnn_channels = 2,3
cls_tcn_channels = 4
cls_tcn_dilations = 1,2
cls_hidden = 5
"""

SIMULATE_ARGS = [
    "--classes", "2", "--per-class", "3", "--seed", "1",
    "--k-frames", "2", "--m-pulses", "16", "--n-fast", "16",
]


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli-data") / "small.rgc"
    assert cli_main(["simulate", *SIMULATE_ARGS, "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def trained(tmp_path_factory, dataset_file):
    root = tmp_path_factory.mktemp("cli-train")
    config = root / "run.cfg"
    config.write_text(RUN_CONFIG)
    ckpt = root / "model.ckpt"
    csv = root / "metrics.csv"
    code = cli_main(
        ["train", "--config", str(config), "--hr", str(dataset_file),
         "--out-ckpt", str(ckpt), "--metrics-csv", str(csv)]
    )
    assert code == 0
    return SimpleNamespace(config=config, ckpt=ckpt, csv=csv)


# ---------------------------------------------------------------------------
# CLI: simulate
# ---------------------------------------------------------------------------


def test_simulate_writes_expected_dataset(dataset_file, capsys):
    records, header = load_dataset(dataset_file)
    assert header.num_records == 6 and header.num_classes == 2
    assert (header.k, header.m, header.n) == (2, 16, 16)
    assert [label for _, label in records] == [0, 0, 0, 1, 1, 1]


def test_simulate_reports_histogram(tmp_path, capsys):
    out = tmp_path / "h.rgc"
    assert cli_main(["simulate", *SIMULATE_ARGS, "--out", str(out)]) == 0
    stdout = capsys.readouterr().out
    assert "wrote 6 records" in stdout and "0=3 1=3" in stdout


def test_simulate_same_seed_byte_identical(tmp_path, dataset_file):
    out = tmp_path / "again.rgc"
    assert cli_main(["simulate", *SIMULATE_ARGS, "--out", str(out)]) == 0
    assert out.read_bytes() == dataset_file.read_bytes()


def test_simulate_full_cube_file_size(tmp_path):
    out = tmp_path / "two.rgc"
    code = cli_main(["simulate", "--classes", "2", "--per-class", "1", "--out", str(out)])
    assert code == 0
    # default cube is (5, 32, 492): 18-byte header + 2 records of 2 + K*M*N*8
    assert out.stat().st_size == 18 + 2 * (2 + 5 * 32 * 492 * 8)


@pytest.mark.parametrize(
    "args",
    [
        ["--classes", "0"],
        ["--classes", "1"],
        ["--classes", "99"],
        ["--per-class", "0"],
        ["--seed", "-1"],
        ["--n-fast", "0"],
    ],
)
def test_simulate_invalid_params_exit_2(tmp_path, capsys, args):
    out = tmp_path / "bad.rgc"
    assert cli_main(["simulate", *args, "--out", str(out)]) == 2
    assert "error:" in capsys.readouterr().err


def test_simulate_unwritable_path_exit_3(tmp_path, capsys):
    out = tmp_path / "missing-dir" / "x.rgc"
    assert cli_main(["simulate", *SIMULATE_ARGS, "--out", str(out)]) == 3
    assert str(out) in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: degrade
# ---------------------------------------------------------------------------


def test_degrade_halves_header_dims(tmp_path, dataset_file):
    out = tmp_path / "lr.rgc"
    code = cli_main(
        ["degrade", "--in", str(dataset_file), "--out", str(out),
         "--ds", "2", "--df", "2", "--noise", "0.05", "--seed", "5"]
    )
    assert code == 0
    _, header = load_dataset(out)
    assert (header.k, header.m, header.n) == (2, 8, 8)
    assert header.num_records == 6 and header.num_classes == 2


def test_degrade_identity_is_byte_identical(tmp_path, dataset_file):
    out = tmp_path / "same.rgc"
    code = cli_main(
        ["degrade", "--in", str(dataset_file), "--out", str(out),
         "--ds", "1", "--df", "1", "--noise", "0"]
    )
    assert code == 0
    assert out.read_bytes() == dataset_file.read_bytes()


def test_degrade_floor_rule(tmp_path, dataset_file):
    out = tmp_path / "x3.rgc"
    code = cli_main(
        ["degrade", "--in", str(dataset_file), "--out", str(out), "--ds", "3", "--df", "5"]
    )
    assert code == 0
    _, header = load_dataset(out)
    assert (header.m, header.n) == (5, 3)


def test_degrade_factor_exceeds_axis_exit_2(tmp_path, dataset_file, capsys):
    out = tmp_path / "x.rgc"
    code = cli_main(["degrade", "--in", str(dataset_file), "--out", str(out), "--ds", "17"])
    assert code == 2


def test_degrade_missing_input_exit_3(tmp_path):
    code = cli_main(
        ["degrade", "--in", str(tmp_path / "nope.rgc"), "--out", str(tmp_path / "x.rgc")]
    )
    assert code == 3


def test_degrade_corrupt_input_exit_4(tmp_path, capsys):
    bad = tmp_path / "bad.rgc"
    bad.write_bytes(b"not a dataset at all")
    code = cli_main(["degrade", "--in", str(bad), "--out", str(tmp_path / "x.rgc")])
    assert code == 4
    assert "magic" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: train
# ---------------------------------------------------------------------------


def test_train_writes_checkpoint_and_csv(trained):
    state = load_checkpoint(trained.ckpt)
    assert any(name.startswith("sr.") for name in state)
    assert any(name.startswith("classifier.") for name in state)
    lines = trained.csv.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 2  # one epoch
    assert lines[1].split(",")[1] == "joint"


def test_train_rerun_is_byte_identical(tmp_path, dataset_file, trained):
    ckpt = tmp_path / "again.ckpt"
    csv = tmp_path / "again.csv"
    code = cli_main(
        ["train", "--config", str(trained.config), "--hr", str(dataset_file),
         "--out-ckpt", str(ckpt), "--metrics-csv", str(csv)]
    )
    assert code == 0
    assert csv.read_bytes() == trained.csv.read_bytes()
    assert ckpt.read_bytes() == trained.ckpt.read_bytes()


def test_train_with_lr_data(tmp_path, dataset_file, trained):
    lr = tmp_path / "lr.rgc"
    code = cli_main(
        ["degrade", "--in", str(dataset_file), "--out", str(lr),
         "--ds", "2", "--df", "2", "--noise", "0.05", "--seed", "5"]
    )
    assert code == 0
    ckpt = tmp_path / "lr.ckpt"
    csv = tmp_path / "lr.csv"
    code = cli_main(
        ["train", "--config", str(trained.config), "--hr", str(dataset_file),
         "--lr-data", str(lr), "--out-ckpt", str(ckpt), "--metrics-csv", str(csv)]
    )
    assert code == 0
    # the LR file stores float32 samples, so this run is close to but not
    # bitwise-equal with the on-the-fly float64 degradation; the bookkeeping
    # columns must still agree, and a rerun must be byte-identical
    row = csv.read_text().splitlines()[1].split(",")
    trained_row = trained.csv.read_text().splitlines()[1].split(",")
    assert row[:4] == trained_row[:4]  # epoch, regime, d, gamma
    ckpt2 = tmp_path / "lr2.ckpt"
    csv2 = tmp_path / "lr2.csv"
    code = cli_main(
        ["train", "--config", str(trained.config), "--hr", str(dataset_file),
         "--lr-data", str(lr), "--out-ckpt", str(ckpt2), "--metrics-csv", str(csv2)]
    )
    assert code == 0
    assert csv2.read_bytes() == csv.read_bytes()
    assert ckpt2.read_bytes() == ckpt.read_bytes()


def test_train_lr_data_dim_mismatch_exit_2(tmp_path, dataset_file, trained, capsys):
    lr = tmp_path / "lr4.rgc"
    assert cli_main(["degrade", "--in", str(dataset_file), "--out", str(lr), "--ds", "4"]) == 0
    code = cli_main(
        ["train", "--config", str(trained.config), "--hr", str(dataset_file),
         "--lr-data", str(lr), "--out-ckpt", str(tmp_path / "x.ckpt"),
         "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2
    assert "expected" in capsys.readouterr().err


def test_train_invalid_regime_combo_exit_2(tmp_path, dataset_file, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("regime = recursive\nd_s = 3\nd_f = 3\n")
    code = cli_main(
        ["train", "--config", str(config), "--hr", str(dataset_file),
         "--out-ckpt", str(tmp_path / "x.ckpt"), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2


def test_train_unknown_config_key_exit_2(tmp_path, dataset_file, capsys):
    config = tmp_path / "bad.cfg"
    config.write_text("regim = joint\n")
    code = cli_main(
        ["train", "--config", str(config), "--hr", str(dataset_file),
         "--out-ckpt", str(tmp_path / "x.ckpt"), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2
    assert "unknown key" in capsys.readouterr().err


def test_train_factor_exceeds_data_exit_2(tmp_path, dataset_file):
    config = tmp_path / "big.cfg"
    config.write_text(RUN_CONFIG.replace("d_s = 2", "d_s = 32"))
    code = cli_main(
        ["train", "--config", str(config), "--hr", str(dataset_file),
         "--out-ckpt", str(tmp_path / "x.ckpt"), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2


# ---------------------------------------------------------------------------
# CLI: eval
# ---------------------------------------------------------------------------


def test_eval_reproduces_final_training_row(tmp_path, dataset_file, trained):
    csv = tmp_path / "eval.csv"
    code = cli_main(
        ["eval", "--ckpt", str(trained.ckpt), "--data", str(dataset_file),
         "--config", str(trained.config), "--metrics-csv", str(csv)]
    )
    assert code == 0
    eval_lines = csv.read_text().splitlines()
    train_lines = trained.csv.read_text().splitlines()
    assert eval_lines[0] == CSV_HEADER
    assert eval_lines[1] == train_lines[-1]


def test_eval_checkpoint_config_mismatch_exit_2(tmp_path, dataset_file, trained, capsys):
    config = tmp_path / "cubic.cfg"
    config.write_text(RUN_CONFIG.replace("regime = joint", "regime = cubic"))
    code = cli_main(
        ["eval", "--ckpt", str(trained.ckpt), "--data", str(dataset_file),
         "--config", str(config), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2
    assert "sr." in capsys.readouterr().err  # names the mismatched parameters


def test_eval_corrupt_checkpoint_exit_4(tmp_path, dataset_file, trained, capsys):
    bad = tmp_path / "bad.ckpt"
    blob = bytearray(trained.ckpt.read_bytes())
    blob[:4] = b"XXXX"
    bad.write_bytes(bytes(blob))
    code = cli_main(
        ["eval", "--ckpt", str(bad), "--data", str(dataset_file),
         "--config", str(trained.config), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 4
    assert "magic" in capsys.readouterr().err


def test_eval_empty_dataset_nonzero_exit(tmp_path, trained, capsys):
    empty = tmp_path / "empty.rgc"
    save_dataset(empty, [], num_classes=2, dims=(2, 16, 16))
    code = cli_main(
        ["eval", "--ckpt", str(trained.ckpt), "--data", str(empty),
         "--config", str(trained.config), "--metrics-csv", str(tmp_path / "x.csv")]
    )
    assert code == 2
    assert "error:" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: export-maps
# ---------------------------------------------------------------------------


def test_export_maps_writes_one_pair_per_frame(tmp_path, dataset_file):
    prefix = tmp_path / "maps"
    code = cli_main(
        ["export-maps", "--data", str(dataset_file), "--record", "0",
         "--out-prefix", str(prefix)]
    )
    assert code == 0
    for k in range(2):  # k_frames of the small dataset
        pgm = tmp_path / f"maps_frame{k}.pgm"
        blob = pgm.read_bytes()
        assert blob.startswith(b"P5\n16 16\n65535\n")
        assert len(blob) == len(b"P5\n16 16\n65535\n") + 16 * 16 * 2
        csv_rows = (tmp_path / f"maps_frame{k}.csv").read_text().splitlines()
        assert len(csv_rows) == 16 and all(len(r.split(",")) == 16 for r in csv_rows)


def test_export_maps_zero_record_gives_uniform_pgm(tmp_path):
    data = tmp_path / "zero.rgc"
    save_dataset(data, [(ComplexCube(np.zeros((1, 4, 4))), 0)], num_classes=1)
    prefix = tmp_path / "z"
    assert cli_main(["export-maps", "--data", str(data), "--out-prefix", str(prefix)]) == 0
    blob = (tmp_path / "z_frame0.pgm").read_bytes()
    header = b"P5\n4 4\n65535\n"
    assert blob == header + b"\x00" * (4 * 4 * 2)
    # the magnitude's smoothing epsilon makes zero maps sqrt(1e-12), not 0
    cell = repr(float(np.sqrt(1e-12)))
    rows = (tmp_path / "z_frame0.csv").read_text().splitlines()
    assert rows == [",".join([cell] * 4)] * 4


def test_export_maps_with_checkpoint(tmp_path, dataset_file, trained):
    prefix = tmp_path / "sr"
    code = cli_main(
        ["export-maps", "--data", str(dataset_file), "--record", "1",
         "--out-prefix", str(prefix), "--ckpt", str(trained.ckpt),
         "--config", str(trained.config)]
    )
    assert code == 0
    blob = (tmp_path / "sr_frame0.pgm").read_bytes()
    assert blob.startswith(b"P5\n16 16\n65535\n")  # restored to full resolution
    assert (tmp_path / "sr_frame1.pgm").exists()


def test_export_maps_ckpt_without_config_exit_2(tmp_path, dataset_file, trained):
    code = cli_main(
        ["export-maps", "--data", str(dataset_file), "--out-prefix", str(tmp_path / "x"),
         "--ckpt", str(trained.ckpt)]
    )
    assert code == 2


def test_export_maps_record_out_of_range_exit_2(tmp_path, dataset_file, capsys):
    code = cli_main(
        ["export-maps", "--data", str(dataset_file), "--record", "99",
         "--out-prefix", str(tmp_path / "x")]
    )
    assert code == 2
    assert "out of range" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# CLI: argument plumbing
# ---------------------------------------------------------------------------


def test_missing_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli_main([])
    assert exc.value.code == 2


def test_module_entry_point_help():
    import subprocess
    import sys as _sys

    proc = subprocess.run(
        [_sys.executable, "-m", "radargest", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "simulate" in proc.stdout and "export-maps" in proc.stdout
