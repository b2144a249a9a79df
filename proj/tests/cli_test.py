"""End-to-end checks of the hcts command-line tool: exit codes, outputs, SVG well-formedness."""

import csv
import json
import shutil
import subprocess
import sys
import xml.etree.ElementTree as ET
from pathlib import Path

CLI = sys.argv[1]
WORK = Path(sys.argv[2])
failures = []


def run(*args, expect=0):
    proc = subprocess.run([CLI, *map(str, args)], capture_output=True, text=True)
    if proc.returncode != expect:
        failures.append(f"{' '.join(map(str, args))}: exit {proc.returncode}, expected {expect}\n{proc.stderr}")
    return proc


def check(cond, what):
    if not cond:
        failures.append(what)


shutil.rmtree(WORK, ignore_errors=True)
WORK.mkdir(parents=True)

# usage errors
run(expect=1)
run("frobnicate", expect=1)
run("dissim", "--dataset", "synth:separable", expect=1)  # missing --out
run("dissim", "--dataset", "synth:separable", "--measure", "euclid", "--out", WORK / "x.json", expect=1)
check(run("--help").stdout.startswith("Learned"), "help text")

# validate
good = WORK / "Three_TRAIN.tsv"
good.write_text("1\t0.1\t0.2\n2\t0.3\t0.4\n3\t0.5\t0.6\n")
out = run("validate", "--dataset", good).stdout
check("c=3 N=3 L=2" in out, f"validate report: {out!r}")
ragged = WORK / "ragged.tsv"
ragged.write_text("1\t0.1\t0.2\n2\t0.3\n3\t0.5\t0.6\n")
check(":2" in run("validate", "--dataset", ragged, expect=2).stderr, "ragged line number")
two = WORK / "two.tsv"
two.write_text("1\t0.1\t0.2\n2\t0.3\t0.4\n")
check("multi-class required" in run("validate", "--dataset", two, expect=2).stderr, "two-class message")
run("validate", "--dataset", WORK / "missing.tsv", expect=2)

# synth -> dissim -> hierarchy
run("synth", "--out", WORK / "synth", "--seed", "2")
tsv = WORK / "synth" / "planted-d3-s2_TRAIN.tsv"
check(tsv.exists(), "synth TSV written")
planted = json.loads((WORK / "synth" / "planted-d3-s2_tree.json").read_text())
check(planted["members"] == list(range(8)), "planted tree root")

for measure in ("jsd", "tsd", "cbd"):
    m1, m2 = WORK / f"{measure}-a.json", WORK / f"{measure}-b.json"
    run("dissim", "--dataset", "synth:separable:2", "--measure", measure, "--seed", "5", "--out", m1)
    run("dissim", "--dataset", "synth:separable:2", "--measure", measure, "--seed", "5", "--out", m2)
    check(m1.read_bytes() == m2.read_bytes(), f"{measure} rerun identical")
    mat = json.loads(m1.read_text())
    vals = mat["values"]
    check(mat["measure"] == measure and len(vals) == 8, f"{measure} matrix shape")
    check(all(vals[i][i] == 0 and all(0 <= v <= 1 for v in vals[i]) for i in range(8)), f"{measure} matrix range")

pairs = WORK / "pairs.json"
pairs.write_text(json.dumps({"measure": "jsd", "class_names": ["a", "b", "c", "d"],
                             "values": [[0, .1, .9, .9], [.1, 0, .9, .9], [.9, .9, 0, .1], [.9, .9, .1, 0]]}))
run("hierarchy", "--matrix", pairs, "--out", WORK / "tree.json", "--newick", WORK / "tree.nwk")
check((WORK / "tree.nwk").read_text().strip() == "((c0,c1),(c2,c3));", "newick of planted pairs")
tree = json.loads((WORK / "tree.json").read_text())
check([c["members"] for c in tree["children"]] == [[0, 1], [2, 3]], "tree JSON children")
bad = WORK / "bad.json"
bad.write_text('{"measure": "jsd", "values": [[0, 2], [2, 0]]}')
run("hierarchy", "--matrix", bad, "--out", WORK / "t2.json", expect=2)
bad.write_text("{oops")
run("hierarchy", "--matrix", bad, "--out", WORK / "t2.json", expect=2)

# bench -> stats
cfg = WORK / "grid.cfg"
cfg.write_text("datasets = synth:separable:1\nmeasures = tsd\nclassifiers = minirocket\nmodes = fc, hc\nfolds = 5\nseed = 3\n")
run("bench", "--config", cfg, "--out", WORK / "bench")
rows = list(csv.DictReader((WORK / "bench" / "results.csv").open()))
check(len(rows) == 10, f"10 result rows, got {len(rows)}")
check(all(float(r["f1_macro"]) >= 0.95 for r in rows), "separable preset F1 >= 0.95")
check({r["method"] for r in rows} == {"minirocket-fc", "minirocket-hc-tsd"}, "method names")

proc = run("stats", "--results", WORK / "bench" / "results.csv", "--out", WORK / "stats")
report = json.loads((WORK / "stats" / "report.json").read_text())
check(len(report["pairwise"]) == 1, "two-method report has one pairwise p")
svg = ET.parse(WORK / "stats" / "cd_diagram.svg").getroot()
check(svg.tag.endswith("svg"), "SVG root element")
check((WORK / "stats" / "ranks.csv").read_text().startswith("dataset,"), "ranks CSV header")

# incomplete block
incomplete = WORK / "incomplete.csv"
incomplete.write_text("dataset,method,fold,f1_macro,train_ms,predict_ms\n"
                      "a,m1,0,0.5,0,0\na,m2,0,0.6,0,0\nb,m1,0,0.7,0,0\n")
check("b/m2" in run("stats", "--results", incomplete, "--out", WORK / "s2", expect=2).stderr, "missing cell listed")

# a config naming only unreadable datasets produces no successful cells
cfg2 = WORK / "empty.cfg"
cfg2.write_text("datasets = nowhere/Nope\nclassifiers = svm\nmodes = fc\n")
run("bench", "--config", cfg2, "--out", WORK / "bench2", expect=2)
run("bench", "--config", WORK / "no-such.cfg", expect=2)

if failures:
    print("\n".join(failures))
    sys.exit(1)
print("all CLI checks passed")
