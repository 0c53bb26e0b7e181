#!/usr/bin/env python3
"""Convert released corpus files (CSV, TSV, XLSX-exported CSV or JSON) to the
JSONL corpus format read by `mtc`: {"id", "source", "text", "labels"}.

Each input is given as SOURCE=PATH, for example

    import_corpus.py fda=FDA.csv medscape=Medscape.csv ehr=EHR.csv -o corpus.jsonl

Column names are detected case-insensitively from common spellings; override
them with --id-col, --text-col and --labels-col. A label cell holds one or
more constraints separated by --label-sep (default ";"), or a JSON array.
Rows with an empty text cell are skipped and reported.
"""

import argparse
import csv
import json
import sys
from pathlib import Path

SOURCES = ("fda", "medscape", "ehr")
ID_NAMES = ("id", "dug_id", "index", "no", "number")
TEXT_NAMES = ("text", "dug", "guideline", "sentence", "drug usage guideline", "instruction")
LABEL_NAMES = ("labels", "label", "mtc", "mtcs", "constraints", "annotation")
NONE_CELLS = {"", "none", "n/a", "na", "-", "[]"}


def find_column(header, override, candidates, what, path):
    lowered = {h.strip().lower(): h for h in header}
    if override:
        if override in header:
            return override
        if override.lower() in lowered:
            return lowered[override.lower()]
        sys.exit(f"{path}: no column named {override!r} (have {header})")
    for c in candidates:
        if c in lowered:
            return lowered[c]
    if what == "id":
        return None  # ids fall back to row numbers
    sys.exit(f"{path}: cannot find the {what} column (have {header}); use --{what}-col")


def split_labels(cell, sep):
    cell = (cell or "").strip()
    if cell.lower() in NONE_CELLS:
        return []
    if cell.startswith("["):
        try:
            return [str(x).strip() for x in json.loads(cell) if str(x).strip()]
        except json.JSONDecodeError:
            pass
    parts = []
    for line in cell.splitlines():
        parts.extend(p.strip() for p in line.split(sep))
    return [p for p in parts if p and p.lower() not in NONE_CELLS]


def read_rows(path):
    if path.suffix.lower() == ".json":
        data = json.loads(path.read_text(encoding="utf-8"))
        if isinstance(data, dict):
            data = next(v for v in data.values() if isinstance(v, list))
        header = list(data[0].keys()) if data else []
        return header, [{k: ("" if v is None else (json.dumps(v) if isinstance(v, list) else str(v)))
                         for k, v in row.items()} for row in data]
    text = path.read_text(encoding="utf-8-sig")
    dialect = csv.Sniffer().sniff(text[:4096], delimiters=",\t;") if path.suffix.lower() != ".tsv" else csv.excel_tab
    reader = csv.DictReader(text.splitlines(keepends=True), dialect=dialect)
    return reader.fieldnames or [], list(reader)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("inputs", nargs="+", metavar="SOURCE=PATH")
    ap.add_argument("-o", "--out", required=True, help="output JSONL path")
    ap.add_argument("--id-col")
    ap.add_argument("--text-col")
    ap.add_argument("--labels-col")
    ap.add_argument("--label-sep", default=";")
    args = ap.parse_args()

    records, skipped, seen = [], 0, set()
    for item in args.inputs:
        source, _, name = item.partition("=")
        source = source.strip().lower()
        if source not in SOURCES or not name:
            sys.exit(f"bad input {item!r}: expected SOURCE=PATH with SOURCE in {SOURCES}")
        path = Path(name)
        header, rows = read_rows(path)
        id_col = find_column(header, args.id_col, ID_NAMES, "id", path)
        text_col = find_column(header, args.text_col, TEXT_NAMES, "text", path)
        labels_col = find_column(header, args.labels_col, LABEL_NAMES, "labels", path)
        for n, row in enumerate(rows, start=1):
            text = (row.get(text_col) or "").strip()
            if not text:
                skipped += 1
                continue
            raw_id = (row.get(id_col) or "").strip() if id_col else ""
            rid = f"{source}-{raw_id or n}"
            if rid in seen:
                rid = f"{source}-{n}"
            seen.add(rid)
            records.append({"id": rid, "source": source, "text": text,
                            "labels": split_labels(row.get(labels_col), args.label_sep)})

    with open(args.out, "w", encoding="utf-8") as out:
        for r in records:
            out.write(json.dumps(r, ensure_ascii=False) + "\n")
    print(f"wrote {len(records)} records to {args.out}; skipped {skipped} rows with empty text", file=sys.stderr)


if __name__ == "__main__":
    main()
