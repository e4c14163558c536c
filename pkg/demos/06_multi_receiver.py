#!/usr/bin/env python3
"""One broadband grounded source, several resonant receivers: each takes
its power at its own resonance, and the joint network quantifies how much
they actually load each other."""

import warnings

from bodychannel.channel import BodyModel, GroundedTx, ReceiverParams, WearableTx
from bodychannel.optimize import joint_loading_check, multi_receiver_power

body = BodyModel(c_b=150e-12)
receivers = [
    ReceiverParams(c_ret=6e-12, r_l=1000.0, l=4.222e-3),   # ~1.0 MHz
    ReceiverParams(c_ret=30e-12, r_l=1000.0, l=0.33e-3),   # ~1.6 MHz
    ReceiverParams(c_ret=2e-12, r_l=1000.0, l=4.0e-3),     # ~1.8 MHz
]

print("broadband grounded source, three receivers")
print("-" * 60)
grounded = GroundedTx(v_in=5.0, convention="pp")
for i, pt in enumerate(multi_receiver_power(receivers, grounded, body), 1):
    print(f"  receiver {i}: f0 = {pt.frequency / 1e6:.3f} MHz, "
          f"P = {pt.p_out_rms * 1e3:.3f} mW")
print("an ideal grounded source pins the body potential, so the branches")
print("cannot disturb each other at all:")
for rec in joint_loading_check(receivers, grounded, body):
    print(f"  receiver {rec.receiver_index + 1}: joint-vs-independent "
          f"deviation {rec.deviation:+.2e}")

print("\nsame receivers behind a wearable source (1 pF coupling)")
print("-" * 60)
wearable = WearableTx(v_in=5.0, convention="pp", c_ret_tx=1e-12)
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    records = joint_loading_check(receivers, wearable, body)
for rec in records:
    print(f"  receiver {rec.receiver_index + 1}: independent "
          f"{rec.independent.p_out_rms * 1e9:8.2f} nW, joint "
          f"{rec.joint_power_rms * 1e9:8.2f} nW ({rec.deviation:+.1%})")
if caught:
    print(f"\n{len(caught)} loading warning(s): the 1 kOhm branches are no")
    print("longer negligible against the weakly driven body potential")
