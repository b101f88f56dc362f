"""Smoke test for the anonq_py extension.

Uses an installed `anonq_py` if there is one (`maturin develop`), otherwise
builds the library with cargo and loads it from the target directory.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parents[3]


def load():
    try:
        import anonq_py

        return anonq_py
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "anonq-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libanonq_py.so"
    loader = importlib.machinery.ExtensionFileLoader("anonq_py", str(lib))
    spec = importlib.util.spec_from_file_location("anonq_py", lib, loader=loader)
    module = importlib.util.module_from_spec(spec)
    loader.exec_module(module)
    return module


def main():
    aq = load()

    assert "honest-curious" in aq.strategies()
    assert len(aq.anonymity_strategy_names()) == 9

    cfg = aq.Config(4, 1, 6, 1, 2, seed=3)
    r = aq.run(cfg)
    assert r.status == "success", r
    assert r.psi_holder == "receiver", r
    assert r.delivered_fidelity > 1 - 1e-9
    assert r.ghz_form_violations == 0
    again = aq.run(cfg)
    assert again.transcript == r.transcript
    assert aq.replay_text(r.transcript)["matches"]

    with tempfile.TemporaryDirectory() as out:
        b = aq.batch(aq.Config(4, 1, 4, 1, 3, corrupt=[0, 2], seed=10), "parity-liar", 8, out=out)
        assert b["summary"]["trials"] == 8
        assert b["summary"]["ghz_form_violations"] == 0
        stored = json.loads((pathlib.Path(out) / "report.json").read_text())
        assert stored["summary"] == b["summary"]
        assert aq.replay(str(pathlib.Path(out) / "trial-000000.txt"))["matches"]

    audit = aq.fidelity_audit(aq.Config(4, 1, 6, 1, 3, corrupt=[0, 2], seed=1), "abort-forcer:7", 20)
    assert audit["pass"], audit

    exact = aq.exact_anonymity("ghz-forger:product")
    assert exact["pass"] and exact["max_total_variation"] < 1e-12

    anon = aq.anonymity_test(4, [0], "honest-curious", seed=5)
    assert anon["pass"], anon["sender"]["min_adjusted_p"]

    mean, sem = aq.auth_attack(1, 4, "random-pauli", trials=300, seed=1)
    assert mean >= aq.security_bound(1, 4) - 3 * sem

    for bad in (lambda: aq.Config(4, 1, 4, 1, 1), lambda: aq.run(cfg, "nope")):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("anonq_py smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
