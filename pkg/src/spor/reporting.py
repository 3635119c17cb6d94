"""Report emission: machine-readable JSON plus a human-readable table per aspect.

Reports embed the run configuration and content hashes of every input file
(by basename), so any number in them is reproducible from inputs alone and
reruns into different directories stay byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

SIGNIFICANCE_STRONG = 0.05
SIGNIFICANCE_WEAK = 0.1


def sha256_file(path: Path | str) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def file_stamp(path: Path | str) -> dict:
    path = Path(path)
    return {"file": path.name, "sha256": sha256_file(path)}


def significance_marker(p_value: float) -> str:
    if p_value < SIGNIFICANCE_STRONG:
        return "‡"  # double dagger
    if p_value < SIGNIFICANCE_WEAK:
        return "†"  # dagger
    return ""


def render_table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = []
    for n, row in enumerate(cells):
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def emit_report(out_dir: Path | str, aspect: str, payload: Mapping,
                table_text: str) -> tuple[Path, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"report_{aspect}.json"
    txt_path = out_dir / f"report_{aspect}.txt"
    body = dict(payload)
    body["aspect"] = aspect
    json_path.write_text(json.dumps(body, sort_keys=True, ensure_ascii=False, indent=2) + "\n",
                         encoding="utf-8")
    txt_path.write_text(table_text, encoding="utf-8")
    return json_path, txt_path
