"""Behaviour zones: a total classification of traffic-network states.

Invalid   the system must never be here: deadlock, or every camera slave.
Adaptive  an organization controller is mid-transition (merging, joining,
          electing, demoting).
Undesired adaptation is needed but has not happened: a camera failed and a
          dependent has not detected it yet, or congestion is detected with
          no matching organization yet.
Normal    plain traffic monitoring.

Precedence on overlap: Invalid > Adaptive > Undesired > Normal.
"""

from __future__ import annotations

import enum

from ..model import Network
from ..semantics import State, is_deadlock
from .model import OC_TRANSITIONAL, R_FAILED, R_MWS, R_SLAVE


class Zone(enum.Enum):
    NORMAL = "normal"
    UNDESIRED = "undesired"
    ADAPTIVE = "adaptive"
    INVALID = "invalid"


class ZoneClassifier:
    """Reusable classifier; resolves symbol positions once per network."""

    def __init__(self, net: Network):
        self.cn = net.compiled()
        cn = self.cn
        self.n = len(cn.fam_procs.get("Camera", ()))
        self.camera_procs = cn.fam_procs["Camera"]
        self.oc_procs = cn.fam_procs["OrganizationController"]
        self.slave_loc = cn.loc_ids[self.camera_procs[0]]["Slave"]
        oc0 = self.oc_procs[0]
        self.oc_transitional = frozenset(
            cn.loc_ids[oc0][name] for name in OC_TRANSITIONAL)
        self.oc_cong = frozenset(
            cn.loc_ids[oc0][name] for name in ("CongestionDetected", "CongestedAlone"))
        slot = cn.var_slot_by_name
        self.alive = [slot[f"alive[{i}]"] for i in range(self.n)]
        self.role = [slot[f"role[{i}]"] for i in range(self.n)]
        self.m_cam = [slot[f"camera[{i}].m_cam"] for i in range(self.n)]
        self.slaves = [[slot[f"camera[{i}].slaves[{j}]"] for j in range(self.n)]
                       for i in range(self.n)]
        self.left = [slot[f"leftN[{i}]"] for i in range(self.n)]
        self.right = [slot[f"rightN[{i}]"] for i in range(self.n)]
        self.det = [[slot[f"det[{i}][{j}]"] for j in range(self.n)]
                    for i in range(self.n)]

    def _depends_on(self, V, i: int, c: int) -> bool:
        if i == c:
            return False
        if V[self.left[i]] == c or V[self.right[i]] == c:
            return True
        if V[self.role[i]] == R_SLAVE and V[self.m_cam[i]] == c:
            return True
        if V[self.role[i]] == R_MWS and V[self.slaves[i][c]]:
            return True
        return False

    def classify(self, s: State) -> Zone:
        V = s.vars
        all_slave = all(s.locs[p] == self.slave_loc for p in self.camera_procs)
        if all_slave or is_deadlock(self.cn, s):
            return Zone.INVALID
        if any(s.locs[p] in self.oc_transitional for p in self.oc_procs):
            return Zone.ADAPTIVE
        for c in range(self.n):
            if V[self.alive[c]]:
                continue
            for i in range(self.n):
                if V[self.alive[i]] and self._depends_on(V, i, c) \
                        and not V[self.det[i][c]]:
                    return Zone.UNDESIRED
        if any(s.locs[p] in self.oc_cong for p in self.oc_procs):
            return Zone.UNDESIRED
        return Zone.NORMAL


def classify_zone(net: Network, s: State) -> Zone:
    return ZoneClassifier(net).classify(s)
