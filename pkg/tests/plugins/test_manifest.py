import json

import xxhash

from cslab import Cslab
from cslab.plugins.manifest import file_hash, versions, write_manifest


def test_file_hash(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("t,rho\n")
    assert file_hash(path) == xxhash.xxh64(b"t,rho\n").hexdigest()


def test_versions():
    assert set(versions()) == {"cslab", "python", "numpy", "scipy"}


def test_write_manifest_lists_written_files(in_tmp):
    m = Cslab(overrides={"output_dir": "out"})
    out = m.output_dir
    report = out / "simplex.json"
    report.write_text("{}\n")
    m.written.append(report)
    path = write_manifest(m, out, status="ok")
    manifest = json.loads(path.read_text())
    assert manifest["status"] == "ok"
    assert manifest["artifacts"] == [
        {"path": "simplex.json", "xxhash64": file_hash(report), "bytes": 3}
    ]
    assert manifest["config_hash"] is not None


def test_manifest_without_config(in_tmp):
    m = Cslab()
    path = write_manifest(m, in_tmp / "out", status="ConfigError")
    manifest = json.loads(path.read_text())
    assert manifest["config_hash"] is None
    assert manifest["artifacts"] == []
