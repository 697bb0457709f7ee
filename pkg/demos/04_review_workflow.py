"""The human side: mark wrong images, label clusters, merge, and read
the precision numbers. No server here, just the session API the server
wraps."""

import tempfile
from pathlib import Path

from taphos.evaluation import (
    add_mark,
    apply_merge,
    compute_precision,
    export_marks,
    load_session,
    new_session,
    save_session,
    set_label,
    set_merge,
)

# 24 images the clusterer split into 4 clusters; in truth there are
# only 3 kinds, clusters 2 and 3 are the same thing cut in half
assignments = {f"img_{i:02d}": min(i // 6, 3) for i in range(24)}

session = new_session("assignments.csv")

# reviewer clicks through and flags the strays
for wrong in ("img_03", "img_17"):
    session = add_mark(session, wrong, assignments)
print("marks in click order:", list(session.marks))
print("export file contents:", repr(export_marks(session)))

session = set_label(session, 0, "fresh", assignments)
session = set_label(session, 1, "bloat", assignments)
session = set_label(session, 2, "advanced decay", assignments)
session = set_label(session, 3, "advanced decay", assignments)

report = compute_precision(assignments, session.marks)
print()
print("before merging:")
for c, cp in report.per_cluster.items():
    print(f"  cluster {c}: {cp.total} images, {cp.missed} missed, "
          f"precision {cp.precision:.3f}")
print(f"  macro {report.macro_precision:.3f}  micro {report.micro_precision:.3f}")

# fold clusters 2 and 3 together; targets renumber to 0..2
session = set_merge(session, {0: 0, 1: 1, 2: 2, 3: 2}, assignments)
merged = apply_merge(list(assignments.values()), session.merge_map)
grouped = {i: int(g) for i, g in zip(assignments, merged)}
report = compute_precision(grouped, session.marks)
print()
print(f"after merging into {len(report.per_cluster)} groups:")
for c, cp in report.per_cluster.items():
    print(f"  group {c}: {cp.total} images, {cp.missed} missed, "
          f"precision {cp.precision:.3f}")
print(f"  macro {report.macro_precision:.3f}  micro {report.micro_precision:.3f}")

# sessions survive on disk, atomically
path = Path(tempfile.mkdtemp(prefix="taphos-demo-")) / "session.json"
save_session(session, path)
back = load_session(path)
assert back.marks == session.marks
assert back.merge_map == session.merge_map
print()
print(f"session persisted to {path} and read back intact")
