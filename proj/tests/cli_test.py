"""End-to-end checks of the ddnav command line."""

import json
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

BIN = Path(sys.argv[1]).resolve()
SCHEMA = json.loads(Path(sys.argv[2]).read_text())
failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def ddnav(*args, env=None, cwd):
    e = dict(os.environ)
    e.update(env or {})
    return subprocess.run([str(BIN), *args], cwd=cwd, env=e, capture_output=True, text=True, timeout=600)


def pipeline(work):
    outs = {}
    r = ddnav("gen-scenes", "--count", "10", "--seed", "7", "--out", "scenes/", cwd=work)
    check(r.returncode == 0, "gen-scenes exits 0")
    files = sorted((work / "scenes").glob("*.json"))
    check(len(files) == 10, "gen-scenes writes 10 files")
    (work / "ins.txt").write_text("I am thirsty\nI want to sit down\nI want decoration for my home\n")
    r = ddnav("suite", "--scenes", "scenes/", "--instructions", "ins.txt", "--backend", "rule", "--out",
              "report.json", "--trajectories", "traj.jsonl", "--spawns", "2", "--parallelism", "3", cwd=work)
    check(r.returncode == 0, "suite exits 0")
    r = ddnav("suite", "--scenes", "scenes/", "--instructions", "ins.txt", "--backend", "mock", "--out",
              "mock.json", "--spawns", "1", cwd=work)
    check(r.returncode == 0, "suite with the mock backend exits 0")
    r = ddnav("bootstrap-kb", "--scenes", "scenes/", "--instructions", "ins.txt", "--spawns", "1", "--kb",
              "boot.jsonl", cwd=work)
    check(r.returncode == 0, "bootstrap-kb exits 0")
    r = ddnav("reflect-rounds", "--scenes", "scenes/", "--instructions", "ins.txt", "--kb", "kb.jsonl",
              "--rounds", "2", "--episodes-per-round", "40", "--out", "rounds.json", cwd=work)
    check(r.returncode == 0, "reflect-rounds exits 0")
    r = ddnav("export-sft", "--kb", "kb.jsonl", "--out", "sft.jsonl", "--demand-qa", "qa.jsonl", cwd=work)
    check(r.returncode == 0, "export-sft exits 0")
    r = ddnav("report", "--in", "report.json", "rounds.json", "--out", "table.txt", cwd=work)
    check(r.returncode == 0, "report exits 0")
    for name in ["report.json", "mock.json", "traj.jsonl", "boot.jsonl", "rounds.json", "kb.jsonl", "sft.jsonl",
                 "qa.jsonl", "table.txt"] + [f"scenes/{f.name}" for f in files]:
        outs[name] = (work / name).read_bytes()
    return outs


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    a, b = tmp / "a", tmp / "b"
    a.mkdir()
    b.mkdir()
    first = pipeline(a)
    second = pipeline(b)
    for name in first:
        check(first[name] == second[name], f"rerun reproduces {name} byte for byte")

    for name in ["report.json", "mock.json", "rounds.json"]:
        doc = json.loads(first[name])
        try:
            jsonschema.validate(doc, SCHEMA)
            ok = True
        except jsonschema.ValidationError as e:
            print(e)
            ok = False
        check(ok, f"{name} validates against the report schema")
        for rep in doc["reports"]:
            check(all(k in rep["overall"] for k in ("nsr", "spl", "ssr")), f"{name} {rep['label']} has NSR/SPL/SSR")

    rounds = json.loads(first["rounds.json"])
    check(rounds["hindrances"][1] <= rounds["hindrances"][0], "round 2 has no more hindrances than round 1")
    kb_lines = first["kb.jsonl"].decode().splitlines()
    sft_lines = first["sft.jsonl"].decode().splitlines()
    check(len(kb_lines) == len(sft_lines) > 0, "one SFT record per experience")
    check(all(set(json.loads(l)) == {"question", "answer", "source"} for l in sft_lines), "SFT records have three keys")
    check(b"full" in first["table.txt"] and b"round 2" in first["table.txt"], "table lists every report")

    # usage errors
    r = ddnav("suite", "--scenes", "scenes/", "--instructions", "ins.txt", "--bogus", cwd=a)
    check(r.returncode == 2, "unknown flag exits 2")
    check("Usage" in r.stdout + r.stderr or "--scenes" in r.stdout + r.stderr, "unknown flag prints usage")
    r = ddnav("teleport", cwd=a)
    check(r.returncode == 2, "unknown subcommand exits 2")
    r = ddnav(cwd=a)
    check(r.returncode == 2, "missing subcommand exits 2")

    # domain errors: one line, no stack trace
    r = ddnav("gen-scenes", "--count", "1", "--density", "0.99", "--out", "dense", cwd=a)
    check(r.returncode == 1, "unsatisfiable density exits 1")
    check("error" in r.stderr.lower() and "terminate" not in r.stderr, "domain error is a diagnostic line")
    (a / "empty.jsonl").write_text("")
    r = ddnav("export-sft", "--kb", "empty.jsonl", "--out", "x.jsonl", cwd=a)
    check(r.returncode == 1, "empty knowledge base exits 1")
    (a / "bad.json").write_text("{\"width\": 3")
    r = ddnav("run", "--scene", "bad.json", "--instruction", "I am thirsty", cwd=a)
    check(r.returncode == 1, "malformed scene exits 1")

    # precedence: flag > config file > environment > default
    scene = "scenes/scene_000.json"

    def steps(*extra, env=None):
        out = a / "ep.json"
        if out.exists():
            out.unlink()
        r = ddnav("run", "--scene", scene, "--instruction", "I want to work out", "--out", "ep.json", *extra,
                  env=env, cwd=a)
        if r.returncode != 0:
            print(r.stderr)
            return None, r.stderr
        return json.loads(out.read_text())["steps"], r.stderr

    (a / "cfg.toml").write_text("[run]\nmax-steps = 2\n")
    s, log = steps()
    check(s is not None and s > 3 and "config max-steps = 200 (default)" in log, "default applies without overrides")
    s, log = steps(env={"DDNAV_MAX_STEPS": "3"})
    check(s == 3 and "(env)" in log, "environment overrides the default")
    s, log = steps("--config", "cfg.toml", env={"DDNAV_MAX_STEPS": "3"})
    check(s == 2 and "(config)" in log, "config file overrides the environment")
    s, log = steps("--config", "cfg.toml", "--max-steps", "1", env={"DDNAV_MAX_STEPS": "3"})
    check(s == 1 and "(flag)" in log, "flag overrides the config file")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
