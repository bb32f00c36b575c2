#!/usr/bin/env python3
"""Regenerates tests/fixtures/api_fixture.json by replaying requests against a live `dfit serve`.

usage: make_api_fixture.py path/to/dfit [output.json]
"""

import base64
import json
import pathlib
import subprocess
import sys
import tempfile
import urllib.error
import urllib.request

ROOT = pathlib.Path(__file__).resolve().parent.parent

FONTS = {
    "sans": lambda x, y: (x, y),
    "condensed": lambda x, y: (0.5 + 0.8 * (x - 0.5), y),
    "slanted": lambda x, y: (x + 0.12 * (y - 0.5), y),
    "wide": lambda x, y: (0.5 + 1.1 * (x - 0.5), 0.5 + 0.95 * (y - 0.5)),
}
CLASSES = ["L", "O", "T"]


def demo_catalog():
    templates = json.loads((ROOT / "data" / "letter_templates.json").read_text())["templates"]
    by_class = {t["class"]: t for t in templates}
    records = []
    for cls in CLASSES:
        for font, f in FONTS.items():
            params = []
            for x, y in by_class[cls]["points"]:
                px, py = f(x, y)
                params += [round(px, 6), round(py, 6)]
            records.append({"id": f"{font}-{cls}", "class": cls, "params": params, "thickness": [],
                            "font": font, "source": f"demo/{font}/{cls}"})
    records.sort(key=lambda r: r["id"])
    return {"format": "dfit-catalog", "version": 1, "templates": "bundled", "records": records}


def l_raster(n=32):
    ink = [[255] * n for _ in range(n)]
    for j in range(n):
        for i in range(n):
            if (6 <= i < 12 and 5 <= j < 27) or (6 <= i < 24 and 21 <= j < 27):
                ink[j][i] = 0
    return f"P5 {n} {n} 255\n".encode() + bytes(v for row in ink for v in row)


def requests(catalog):
    rec = next(r for r in catalog["records"] if r["id"] == "slanted-L")
    near = [v + 0.01 for v in rec["params"]]
    pgm = base64.b64encode(l_raster()).decode()
    bad_pgm = base64.b64encode(b"P5 4 4 255\n" + bytes(5)).decode()
    return [
        ("glyphs, first page", "GET", "/glyphs", {}, None),
        ("glyphs of one class", "GET", "/glyphs", {"class": "L"}, None),
        ("page beyond end", "GET", "/glyphs", {"class": "L", "page": "2"}, None),
        ("unknown class", "GET", "/glyphs", {"class": "zz"}, None),
        ("invalid page", "GET", "/glyphs", {"page": "0"}, None),
        ("nearest to an existing record", "POST", "/nearest", {}, {"params": rec["params"], "k": 3, "class": "L"}),
        ("nearest without class filter", "POST", "/nearest", {}, {"params": near, "k": 2}),
        ("nearest with default k", "POST", "/nearest", {}, {"params": near, "class": "L"}),
        ("nearest length mismatch", "POST", "/nearest", {}, {"params": [0.1, 0.2, 0.3], "class": "L"}),
        ("nearest with k=0", "POST", "/nearest", {}, {"params": rec["params"], "k": 0}),
        ("nearest malformed JSON", "POST", "/nearest", {}, '{"params": [0.1,'),
        ("fit of a raster L", "POST", "/fit2d", {}, {"class": "L", "pgm_base64": pgm, "iterations": 20}),
        ("fit of a truncated PGM", "POST", "/fit2d", {}, {"class": "L", "pgm_base64": bad_pgm}),
        ("fit of an unknown class", "POST", "/fit2d", {}, {"class": "zz", "pgm_base64": pgm}),
        ("fit with two inputs", "POST", "/fit2d", {}, {"class": "L", "pgm_base64": pgm, "field_base64": ""}),
        ("unknown endpoint", "GET", "/fonts", {}, None),
        ("wrong method", "POST", "/glyphs", {}, {}),
    ]


SCHEMA = {
    "error": {"error": "string", "offset?": "integer"},
    "glyphs": {"class": "string|null", "page": "integer", "page_size": "integer", "pages": "integer",
               "total": "integer", "glyphs": "array"},
    "glyph": {"id": "string", "class": "string", "params": "number[]", "font": "string", "svg": "string|null"},
    "nearest": {"query": "number[]", "k": "integer", "class": "string|null", "matches": "array"},
    "match": {"id": "string", "class": "string", "params": "number[]", "font": "string", "rank": "integer",
              "distance": "number"},
    "fit2d": {"class": "string", "params": "number[]", "svg": "string", "loss": "object", "iterations": "integer",
              "best_iteration": "integer", "termination": "string", "thickness?": "number[]"},
    "loss": {"surface": "number", "align": "number", "template": "number", "total": "number"},
}


def main():
    dfit = sys.argv[1]
    out = pathlib.Path(sys.argv[2]) if len(sys.argv) > 2 else ROOT / "tests" / "fixtures" / "api_fixture.json"
    catalog = demo_catalog()
    with tempfile.TemporaryDirectory() as tmp:
        cat_path = pathlib.Path(tmp) / "catalog.json"
        cat_path.write_text(json.dumps(catalog))
        proc = subprocess.Popen([dfit, "serve", "--catalog", str(cat_path), "--port", "0"],
                                stderr=subprocess.PIPE, text=True)
        try:
            line = proc.stderr.readline()
            port = int(line.rsplit(":", 1)[1])
            exchanges = []
            for name, method, path, query, body in requests(catalog):
                url = f"http://127.0.0.1:{port}{path}"
                if query:
                    url += "?" + "&".join(f"{k}={v}" for k, v in query.items())
                data = None
                if body is not None:
                    data = (body if isinstance(body, str) else json.dumps(body)).encode()
                req = urllib.request.Request(url, data=data, method=method)
                try:
                    with urllib.request.urlopen(req) as r:
                        status, text = r.status, r.read().decode()
                except urllib.error.HTTPError as e:
                    status, text = e.code, e.read().decode()
                exchanges.append({"name": name, "method": method, "path": path, "query": query,
                                  "body": body, "status": status, "response": json.loads(text)})
        finally:
            proc.terminate()
            proc.wait()
    fixture = {"format": "dfit-api-fixture", "version": 1, "catalog": catalog, "schema": SCHEMA,
               "exchanges": exchanges}
    out.write_text(json.dumps(fixture, indent=1) + "\n")


if __name__ == "__main__":
    main()
