"""Checks the published JSON schemas against real documents and wire traffic.

usage: check_schemas.py <source-dir> <shersim-binary>
"""

import glob
import json
import os
import subprocess
import sys
import tempfile

import jsonschema
import websocket

failures = []


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def validator(path, ref=None):
    schema = json.load(open(path))
    jsonschema.Draft202012Validator.check_schema(schema)
    if ref:
        schema = dict(schema, **{"$ref": "#/$defs/" + ref})
        schema.pop("anyOf", None)
    return jsonschema.Draft202012Validator(schema)


def valid(v, doc):
    return not list(v.iter_errors(doc))


def scenario_checks(src, exe):
    v = validator(os.path.join(src, "schema/scenario.schema.json"))
    for path in sorted(glob.glob(os.path.join(src, "scenarios/*.json"))):
        check(valid(v, json.load(open(path))), "scenario file " + os.path.basename(path))
        out = subprocess.run([exe, "validate", "--scenario", path, "--print"], capture_output=True, text=True)
        doc = json.loads(out.stdout.split("\n", 1)[1])
        check(out.returncode == 0 and valid(v, doc), "materialised " + os.path.basename(path))

    check(valid(v, {}), "empty scenario")
    bad = [
        {"scene": {"radius": -1}},
        {"mode": "XYZ"},
        {"robots": {"middle": {}}},
        {"robots": {"right": {"scaling": [1, 1, 1, 1, 1]}}},
        {"robots": {"right": {"base": {}, "mount": {}}}},
        {"robots": {"left": {"afc": {"force_gain": [0, 1e-4]}}}},
        {"dt": 0},
        {"colour": "red"},
    ]
    with tempfile.TemporaryDirectory() as tmp:
        for i, doc in enumerate(bad):
            p = os.path.join(tmp, "bad%d.json" % i)
            json.dump(doc, open(p, "w"))
            rc = subprocess.run([exe, "validate", "--scenario", p], capture_output=True).returncode
            check(not valid(v, doc) and rc == 2, "rejected by schema and loader: " + json.dumps(doc))


def teleop_checks(src, exe):
    path = os.path.join(src, "schema/teleop.schema.json")
    client, server = validator(path, "client_message"), validator(path, "server_message")

    good_in = {"type": "input", "robot": "right", "t_client": 0.5, "v": [0.001, 0, 0, 0, 0, 0], "pedal": 1, "clutch": 1}
    check(valid(client, good_in), "client input")
    check(valid(client, {"type": "hello", "version": 1, "client": "check"}), "client hello")
    check(not valid(client, dict(good_in, pedal=1.5)), "pedal above 1 is rejected")
    check(not valid(client, dict(good_in, robot="middle")), "unknown robot is rejected")
    check(not valid(client, dict(good_in, v=[0, 0, 0])), "short velocity is rejected")

    with tempfile.TemporaryDirectory() as tmp:
        proc = subprocess.Popen(
            [exe, "serve", "--scenario", os.path.join(src, "scenarios/default.json"), "--port", "0",
             "--duration", "3", "--decimation", "10", "--out", tmp],
            stdout=subprocess.PIPE, text=True)
        try:
            line = proc.stdout.readline()
            url = line.split()[1]
            ws = websocket.create_connection(url, timeout=5)
            hello = json.loads(ws.recv())
            check(hello["type"] == "hello" and valid(server, hello), "server hello")

            seen = {}
            for msg in [json.dumps(good_in), '{"type": "warp"}', '{"type":"input","v":[NaN]}', "{",
                        json.dumps(dict(good_in, extra=1))]:
                ws.send(msg)
            for _ in range(200):
                m = json.loads(ws.recv())
                seen.setdefault(m["type"], []).append(m)
                if len(seen.get("error", [])) >= 4 and len(seen.get("state", [])) >= 5:
                    break
            check(all(valid(server, m) for ms in seen.values() for m in ms),
                  "%d live server messages validate" % sum(map(len, seen.values())))
            check(len(seen.get("error", [])) == 4, "four error replies")
            check(len(seen.get("state", [])) >= 5, "state snapshots received")

            ws.send(json.dumps({"type": "bye"}))
            while True:
                m = json.loads(ws.recv())
                if m["type"] == "bye":
                    break
            check(valid(server, m), "server bye")
            ws.close()
        finally:
            proc.wait(timeout=30)
        check(proc.returncode == 0, "serve exits cleanly")
        check(len(glob.glob(os.path.join(tmp, "trial_*.csv"))) == 1, "serve writes the session trial CSV")


def main():
    src, exe = sys.argv[1], sys.argv[2]
    scenario_checks(src, exe)
    teleop_checks(src, exe)
    print("%d failure(s)" % len(failures))
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
