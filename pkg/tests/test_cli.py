import stat

import pytest

from zkpodi.cli import main


def pipeline(root, seed=7):
    lea, a, b = root / "lea", root / "a", root / "b"
    assert main(["setup", "--out", str(lea), "--params", "2,4,1", "--seed", str(seed)]) == 0
    assert main(["issue", "--lea", str(lea), "--vehicle", "alice", "--count", "2", "--out", str(a), "--seed", str(seed)]) == 0
    assert main(["issue", "--lea", str(lea), "--vehicle", "bob", "--out", str(b), "--seed", str(seed)]) == 0
    msg = root / "msg.bin"
    code = main([
        "prove", "--lea-pub", str(lea / "lea_pub.bin"), "--pk", str(lea / "pk_2_4_1.bin"),
        "--orthonym", str(a / "orthonym.secret"), "--own", str(a / "bundle_0.bin"),
        "--neighbor", str(b / "bundle_0.bin"), "--out", str(msg), "--seed", str(seed),
    ])  # fmt: skip
    assert code == 0
    return lea, a, b, msg


@pytest.fixture
def run(tmp_path):
    return pipeline(tmp_path)


def test_pipeline_verifies(run, capsys):
    lea, _, _, msg = run
    assert main(["verify", "--lea-pub", str(lea / "lea_pub.bin"), "--msg", str(msg)]) == 0
    assert capsys.readouterr().out.strip().endswith("OK")
    assert len(msg.read_bytes()) == 400


def test_secret_files_are_private(run):
    lea, a, _, _ = run
    assert stat.S_IMODE((a / "orthonym.secret").stat().st_mode) == 0o600
    assert stat.S_IMODE((lea / "lea_state.json").stat().st_mode) == 0o600
    secret = (a / "orthonym.secret").read_bytes()
    for public in [lea / "lea_pub.bin", a / "bundle_0.bin", run[3]]:
        assert secret[:32] not in public.read_bytes()


def test_hex_edited_message_rejected(run, tmp_path, capsys):
    lea, _, _, msg = run
    text = bytearray(msg.read_bytes().hex().encode())
    pos = len(text) - 40  # inside the proof field
    text[pos] = ord("0") if text[pos] != ord("0") else ord("1")
    edited = tmp_path / "edited.hex"
    edited.write_bytes(bytes(text))
    capsys.readouterr()
    assert main(["verify", "--lea-pub", str(lea / "lea_pub.bin"), "--msg", str(edited), "--hex"]) == 1
    assert "reason=BadProof" in capsys.readouterr().err


def test_sybil_attempt_refused(run, tmp_path, capsys):
    lea, a, _, _ = run
    code = main([
        "prove", "--lea-pub", str(lea / "lea_pub.bin"), "--pk", str(lea / "pk_2_4_1.bin"),
        "--orthonym", str(a / "orthonym.secret"), "--own", str(a / "bundle_0.bin"),
        "--neighbor", str(a / "bundle_1.bin"), "--out", str(tmp_path / "x.bin"),
    ])  # fmt: skip
    assert code == 1
    assert "reason=SybilCollision" in capsys.readouterr().err
    assert not (tmp_path / "x.bin").exists()


def test_duplicate_provisioning(run, tmp_path, capsys):
    lea = run[0]
    assert main(["issue", "--lea", str(lea), "--vehicle", "alice", "--out", str(tmp_path / "again")]) == 2
    assert "already holds" in capsys.readouterr().err


def test_malformed_message(run, tmp_path, capsys):
    lea = run[0]
    junk = tmp_path / "junk.bin"
    junk.write_bytes(b"PODIMSG1" + b"\x00" * 20)
    assert main(["verify", "--lea-pub", str(lea / "lea_pub.bin"), "--msg", str(junk)]) == 1
    assert "reason=MalformedMessage" in capsys.readouterr().err


def test_missing_file_is_usage_error(tmp_path):
    assert main(["verify", "--lea-pub", str(tmp_path / "nope"), "--msg", str(tmp_path / "nope")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["setup", "--out", str(tmp_path), "--params", "3,3"])
    assert exc.value.code == 2


def test_inspect(run, capsys):
    capsys.readouterr()
    assert main(["inspect", "--msg", str(run[3])]) == 0
    out = capsys.readouterr().out
    assert out.startswith("params      2,4,1") and "neighbor[0]" in out


def test_seeded_pipeline_is_bit_identical(tmp_path):
    first = pipeline(tmp_path / "one", seed=42)
    pipeline(tmp_path / "two", seed=42)
    files = sorted(p.relative_to(tmp_path / "one") for p in (tmp_path / "one").rglob("*") if p.is_file())
    assert len(files) >= 9
    for rel in files:
        assert (tmp_path / "one" / rel).read_bytes() == (tmp_path / "two" / rel).read_bytes(), rel
    third = pipeline(tmp_path / "three", seed=43)
    assert first[3].read_bytes() != third[3].read_bytes()


def test_sim_command(tmp_path, capsys):
    cfg = tmp_path / "scenario.txt"
    cfg.write_text("params = 2,2,1\nhonest_count = 3\nattacker = ReplayForeignProof\nseed = 9\n")
    out_csv = tmp_path / "report.csv"
    assert main(["sim", "--config", str(cfg), "--csv", str(out_csv)]) == 0
    text = capsys.readouterr().out
    assert "false_accepts" in text
    assert out_csv.read_text().startswith("metric,value")


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    assert main(["bench", "--grid", "2,2;4,8", "--trials", "30", "--out", str(out), "--seed", "1"]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "nx,np,k,keygen_ms,tp_ms,tp_sd,tv_ms,tv_sd,proof_bytes,constraints,trials"
    assert len(lines) == 3
    assert main(["bench", "--grid", "2,2", "--trials", "5", "--out", str(out)]) == 2
