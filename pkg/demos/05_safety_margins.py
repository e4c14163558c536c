#!/usr/bin/env python3
"""Contact-current compliance: modeled body return current against a
user-supplied limit table, and the largest drive that stays inside it."""

from pathlib import Path

from bodychannel.channel import BodyModel, GroundedTx
from bodychannel.safety import check, contact_current, load_limit_table, max_safe_input

LIMITS = Path(__file__).resolve().parent.parent / "scenarios" / "example_limits.lmt"

src = GroundedTx(v_in=12.0, convention="pp")
body = BodyModel(c_b=150e-12)
table = load_limit_table(LIMITS)

print(f"limit table: {table.source_label}")
print("-" * 60)

print("modeled body return current (12 Vpp, C_B = 150 pF):")
for f in (0.2e6, 0.5e6, 1.0e6, 1.747e6, 3.0e6, 6.0e6):
    i_rms = contact_current(src, body, f)
    print(f"  {f / 1e6:6.3f} MHz -> {i_rms * 1e3:6.3f} mA rms")

f_op = 1.747e6
report = check(src, body, f_op, table)
print(f"\ncompliance at {f_op / 1e6:.3f} MHz:")
print(f"  current {report.contact_current_rms * 1e3:.3f} mA vs limit "
      f"{report.limit * 1e3:.1f} mA -> margin {report.margin:.2f}x, "
      f"{'PASS' if report.passed else 'FAIL'}")
print(f"  note: {report.note}")

v_max = max_safe_input(body, f_op, table, src)
print(f"\nlargest drive holding the limit: {v_max:.1f} Vpp")
confirm = check(GroundedTx(v_in=v_max, convention="pp"), body, f_op, table)
print(f"  check at that drive: margin {confirm.margin:.6f}x (exactly at the limit)")

print("\nmeasured incident fields fold into the same verdict:")
report_e = check(src, body, f_op, table, measured_e=120.0, measured_h=0.3)
for fc in report_e.field_checks:
    print(f"  {fc.name}: {fc.measured} vs limit {fc.limit} -> "
          f"{'ok' if fc.passed else 'VIOLATION'}")
print(f"  overall: {'PASS' if report_e.passed else 'FAIL'}")
