"""Language-similarity analysis over language centroids.

Average-linkage agglomerative clustering under cosine distance, flat cuts
of the merge tree, V-measure against a genealogical family labeling, and
CSV export of centroids for external plotting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInputError
from .geometry import Centroid, cosine_distance


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: the two clusters joined and their distance."""

    left: tuple[str, ...]
    right: tuple[str, ...]
    distance: float


@dataclass(frozen=True)
class ClusterTree:
    """Binary merge tree recorded as the ordered list of merges.

    ``leaves`` holds every input language exactly once (sorted); replaying
    ``merges`` from singletons reconstructs any intermediate partition.
    Merge distances are non-decreasing under average linkage.
    """

    leaves: tuple[str, ...]
    merges: tuple[Merge, ...]


def agglomerative_cluster(centroids: list[Centroid]) -> ClusterTree:
    """Average-linkage clustering of language centroids under cosine distance.

    Group-to-group distance is the mean of the base centroid distances over
    all cross pairs, maintained with the size-weighted update rule. Distance
    ties merge the pair with the lexicographically smallest language
    representatives first, making the tree independent of input order.
    """
    if len(centroids) < 2:
        raise EmptyInputError("clustering needs at least two centroids")
    dims = {c.vector.shape[0] for c in centroids}
    if len(dims) != 1:
        raise ValueError(f"centroid dimensions differ: {sorted(dims)}")
    langs = [c.lang for c in centroids]
    if len(set(langs)) != len(langs):
        raise ValueError("duplicate language codes among centroids")

    order = np.argsort(langs)
    clusters: list[tuple[str, ...]] = [(langs[i],) for i in order]
    vectors = [centroids[i].vector for i in order]
    n = len(clusters)
    dist = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        for j in range(i + 1, n):
            d = cosine_distance(vectors[i], vectors[j])
            dist[i, j] = dist[j, i] = d

    sizes = [1] * n
    merges: list[Merge] = []
    active = list(range(n))
    while len(active) > 1:
        best_key = None
        best_pair = None
        for ai in range(len(active)):
            for aj in range(ai + 1, len(active)):
                i, j = active[ai], active[aj]
                rep = tuple(sorted((clusters[i][0], clusters[j][0])))
                key = (dist[i, j], rep)
                if best_key is None or key < best_key:
                    best_key = key
                    best_pair = (i, j)
        i, j = best_pair
        left, right = sorted((clusters[i], clusters[j]), key=lambda c: c[0])
        merges.append(Merge(left=left, right=right, distance=float(dist[i, j])))

        merged = tuple(sorted(clusters[i] + clusters[j]))
        si, sj = sizes[i], sizes[j]
        for k in active:
            if k in (i, j):
                continue
            dist[i, k] = dist[k, i] = (si * dist[i, k] + sj * dist[j, k]) / (si + sj)
        clusters[i] = merged
        sizes[i] = si + sj
        active.remove(j)

    return ClusterTree(leaves=tuple(sorted(langs)), merges=tuple(merges))


def cut_tree(tree: ClusterTree, k: int) -> list[tuple[str, ...]]:
    """Flat partition into k clusters by undoing the k-1 largest merges.

    Merge distances are non-decreasing, so the largest merges are the last
    ones recorded; replaying all but the final k-1 merges from singletons
    yields the partition. Clusters come back sorted for determinism.
    """
    n = len(tree.leaves)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}, got {k}")
    parts = {(lang,) for lang in tree.leaves}
    for merge in tree.merges[: n - k]:
        parts.remove(merge.left)
        parts.remove(merge.right)
        parts.add(tuple(sorted(merge.left + merge.right)))
    return sorted(parts)


def _entropy(counts: dict) -> float:
    total = sum(counts.values())
    h = 0.0
    for c in counts.values():
        if c > 0:
            p = c / total
            h -= p * math.log(p)
    return h


def v_measure(
    clusters: list[tuple[str, ...]], families: dict[str, str]
) -> tuple[float, float, float]:
    """Homogeneity, completeness, and their harmonic mean, in [0, 1].

    Entropies are natural-log; the score is invariant to the base since only
    entropy ratios enter. Conventions: a single-family labeling scores
    homogeneity 1, a single-cluster partition scores completeness 1, and
    h = c = 0 yields v = 0.
    """
    clustered = [lang for cluster in clusters for lang in cluster]
    if len(clustered) != len(set(clustered)):
        raise ValueError("clusters overlap")
    if set(clustered) != set(families):
        raise ValueError(
            "clusters and family labeling cover different language sets: "
            f"{sorted(set(clustered) ^ set(families))} differ"
        )
    total = len(clustered)
    if total == 0:
        raise EmptyInputError("empty partition")

    family_counts: dict[str, int] = {}
    cluster_counts: dict[int, int] = {}
    joint: dict[tuple[int, str], int] = {}
    for k_idx, cluster in enumerate(clusters):
        for lang in cluster:
            fam = families[lang]
            family_counts[fam] = family_counts.get(fam, 0) + 1
            cluster_counts[k_idx] = cluster_counts.get(k_idx, 0) + 1
            joint[(k_idx, fam)] = joint.get((k_idx, fam), 0) + 1

    h_family = _entropy(family_counts)
    h_cluster = _entropy(cluster_counts)

    h_family_given_cluster = 0.0
    h_cluster_given_family = 0.0
    for (k_idx, fam), n_kf in joint.items():
        p = n_kf / total
        h_family_given_cluster -= p * math.log(n_kf / cluster_counts[k_idx])
        h_cluster_given_family -= p * math.log(n_kf / family_counts[fam])

    homogeneity = 1.0 if h_family == 0.0 else 1.0 - h_family_given_cluster / h_family
    completeness = 1.0 if h_cluster == 0.0 else 1.0 - h_cluster_given_family / h_cluster
    if homogeneity + completeness == 0.0:
        v = 0.0
    else:
        v = 2 * homogeneity * completeness / (homogeneity + completeness)
    return homogeneity, completeness, v


def export_centroids(centroids: list[Centroid], destination) -> int:
    """CSV export, one row per language, full float precision.

    Returns the number of data rows written. An empty input writes a bare
    "lang" header (the dimension is unknowable) and returns 0.
    """
    if not centroids:
        destination.write("lang\n")
        return 0
    dims = {c.vector.shape[0] for c in centroids}
    if len(dims) != 1:
        raise ValueError(f"centroid dimensions differ: {sorted(dims)}")
    dim = dims.pop()
    header = "lang," + ",".join(f"dim{i}" for i in range(dim))
    destination.write(header + "\n")
    for c in centroids:
        destination.write(
            c.lang + "," + ",".join(repr(float(x)) for x in c.vector) + "\n"
        )
    return len(centroids)


def read_centroid_csv(source) -> list[tuple[str, np.ndarray]]:
    """Parse the export_centroids CSV back into (lang, vector) rows."""
    header = source.readline().rstrip("\n")
    if not header.startswith("lang"):
        raise ValueError(f"unexpected CSV header: {header!r}")
    rows = []
    for lineno, line in enumerate(source, start=2):
        line = line.rstrip("\n")
        if not line:
            continue
        fields = line.split(",")
        try:
            vec = np.array([float(x) for x in fields[1:]], dtype=np.float64)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: non-numeric value") from exc
        rows.append((fields[0], vec))
    return rows


def load_family_labeling(path: str) -> dict[str, str]:
    """Two-column TSV "lang<TAB>family"; blank lines and # comments skipped."""
    families: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise ValueError(
                    f"{path}:{lineno}: expected 'lang<TAB>family', got {line!r}"
                )
            lang, family = parts
            if lang in families:
                raise ValueError(f"{path}:{lineno}: duplicate language {lang!r}")
            families[lang] = family
    if not families:
        raise EmptyInputError(f"{path}: no labelings found")
    return families


def default_cut_k(families: dict[str, str]) -> int:
    """Natural flat-cut size: one cluster per distinct family."""
    return len(set(families.values()))


def tree_to_dict(tree: ClusterTree) -> dict:
    """JSON-friendly merge-list form of the tree."""
    return {
        "leaves": list(tree.leaves),
        "merges": [
            {
                "left": list(m.left),
                "right": list(m.right),
                "distance": m.distance,
            }
            for m in tree.merges
        ],
    }


def tree_from_dict(data: dict) -> ClusterTree:
    return ClusterTree(
        leaves=tuple(data["leaves"]),
        merges=tuple(
            Merge(
                left=tuple(m["left"]),
                right=tuple(m["right"]),
                distance=float(m["distance"]),
            )
            for m in data["merges"]
        ),
    )
