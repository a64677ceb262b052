"""Kinematic tree: topology, chains, forward kinematics, bone transforms."""

from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptFile, CyclicTree, OutOfRange
from .pose import Pose
from .rotation import axis_angle_to_matrix

# Parent table of the standard 24-joint SMPL skeleton (root pelvis = -1).
SMPL_PARENTS = (-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
                9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21)


@dataclass
class KinematicTree:
    parents: np.ndarray       # (K,) ints, root has -1
    rest_offsets: np.ndarray  # (K, 3) joint offset from parent in rest pose

    def __post_init__(self):
        self.parents = np.asarray(self.parents, dtype=int)
        self.rest_offsets = np.asarray(self.rest_offsets, dtype=float)
        k = len(self.parents)
        if self.rest_offsets.shape != (k, 3):
            raise ValueError("rest_offsets must have shape (K, 3)")
        roots = np.flatnonzero(self.parents < 0)
        if len(roots) != 1:
            raise CyclicTree(f"expected exactly one root, found {len(roots)}")
        self.root = int(roots[0])
        # Every joint must reach the root without revisiting a node.
        for j in range(k):
            seen, cur = set(), j
            while cur != self.root:
                if cur in seen or not (0 <= cur < k):
                    raise CyclicTree(f"parent links of joint {j} do not reach the root")
                seen.add(cur)
                cur = int(self.parents[cur])
        self._children = [[] for _ in range(k)]
        for j in range(k):
            if j != self.root:
                self._children[int(self.parents[j])].append(j)

    @property
    def num_joints(self) -> int:
        return len(self.parents)

    def children(self, k: int):
        return tuple(self._children[k])

    def ancestors(self, k: int):
        out, cur = [], int(self.parents[k])
        while cur >= 0:
            out.append(cur)
            cur = int(self.parents[cur])
        return out

    def descendants(self, k: int):
        out, stack = [], list(self._children[k])
        while stack:
            j = stack.pop()
            out.append(j)
            stack.extend(self._children[j])
        return out

    def rest_joint_positions(self) -> np.ndarray:
        pos = np.zeros((self.num_joints, 3))
        for j in self._topo_order():
            p = int(self.parents[j])
            base = pos[p] if p >= 0 else 0.0
            pos[j] = base + self.rest_offsets[j]
        return pos

    def _topo_order(self):
        order, stack = [], [self.root]
        while stack:
            j = stack.pop()
            order.append(j)
            stack.extend(reversed(self._children[j]))
        return order


def kinematic_chains(tree: KinematicTree, k: int) -> frozenset:
    """Joints on any root-to-leaf chain through k: ancestors, k, descendants."""
    if not (0 <= k < tree.num_joints):
        raise OutOfRange(f"joint {k} outside 0..{tree.num_joints - 1}")
    return frozenset([k, *tree.ancestors(k), *tree.descendants(k)])


def joint_chain_mask(tree: KinematicTree, k: int) -> np.ndarray:
    """Binary (3K+3,) mask: rotation slots of joints on k's chains plus the
    always-on global-translation tail."""
    chain = kinematic_chains(tree, k)
    mask = np.zeros(3 * tree.num_joints + 3)
    for j in chain:
        mask[3 * j:3 * j + 3] = 1.0
    mask[3 * tree.num_joints:] = 1.0
    return mask


@dataclass
class BoneTransforms:
    """Per-joint rigid maps between canonical (rest) and observation space.

    forward maps a canonical point riding bone i to its posed location;
    inverse is the exact inverse used by backward skinning.  At the rest
    pose with zero translation both are the identity.
    """

    fwd_rot: np.ndarray  # (K, 3, 3)
    fwd_tr: np.ndarray   # (K, 3)
    inv_rot: np.ndarray  # (K, 3, 3)
    inv_tr: np.ndarray   # (K, 3)

    @property
    def num_joints(self) -> int:
        return self.fwd_rot.shape[0]

    def joint_positions(self, tree: KinematicTree) -> np.ndarray:
        """Posed location of every joint origin."""
        rest = tree.rest_joint_positions()
        return np.einsum("kij,kj->ki", self.fwd_rot, rest) + self.fwd_tr


def forward_kinematics(tree: KinematicTree, pose: Pose) -> BoneTransforms:
    k = tree.num_joints
    if pose.num_joints != k:
        raise OutOfRange(f"pose has {pose.num_joints} joints, tree has {k}")
    # Global transforms in rest and posed configurations; the bone map is
    # posed o rest^-1 so it is the identity at the rest pose.
    rest_pos = tree.rest_joint_positions()
    g_rot = np.zeros((k, 3, 3))
    g_tr = np.zeros((k, 3))
    for j in tree._topo_order():
        local = axis_angle_to_matrix(pose.joint_rotations[j])
        p = int(tree.parents[j])
        if p < 0:
            g_rot[j] = local
            g_tr[j] = tree.rest_offsets[j] + pose.global_translation
        else:
            g_rot[j] = g_rot[p] @ local
            g_tr[j] = g_rot[p] @ tree.rest_offsets[j] + g_tr[p]
    # forward = G_posed o T(-rest_pos): R = g_rot, t = g_tr - g_rot @ rest_pos
    fwd_rot = g_rot
    fwd_tr = g_tr - np.einsum("kij,kj->ki", g_rot, rest_pos)
    inv_rot = np.transpose(fwd_rot, (0, 2, 1))
    inv_tr = -np.einsum("kij,kj->ki", inv_rot, fwd_tr)
    return BoneTransforms(fwd_rot, fwd_tr, inv_rot, inv_tr)


SKELETON_HEADER = "#dyco-skel v1"


def save_skeleton(tree: KinematicTree, path) -> None:
    lines = [f"{SKELETON_HEADER} K={tree.num_joints}"]
    for j in range(tree.num_joints):
        off = " ".join(f"{v:.17g}" for v in tree.rest_offsets[j])
        lines.append(f"joint {j} parent {tree.parents[j]} offset {off}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def load_skeleton(path) -> KinematicTree:
    with open(path) as f:
        raw = [ln.strip() for ln in f if ln.strip()]
    if not raw or not raw[0].startswith(SKELETON_HEADER):
        raise CorruptFile(f"{path}: missing skeleton header")
    try:
        k = int(raw[0].split("K=")[1])
    except (IndexError, ValueError) as e:
        raise CorruptFile(f"{path}: malformed header {raw[0]!r}") from e
    parents = np.full(k, -2, dtype=int)
    offsets = np.zeros((k, 3))
    for ln in raw[1:]:
        parts = ln.split()
        if len(parts) != 8 or parts[0] != "joint" or parts[2] != "parent" \
                or parts[4] != "offset":
            raise CorruptFile(f"{path}: malformed joint line {ln!r}")
        j = int(parts[1])
        if not (0 <= j < k):
            raise CorruptFile(f"{path}: joint index {j} out of range")
        parents[j] = int(parts[3])
        offsets[j] = [float(v) for v in parts[5:8]]
    if np.any(parents == -2):
        raise CorruptFile(f"{path}: missing joint lines")
    return KinematicTree(parents, offsets)
