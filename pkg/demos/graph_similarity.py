"""
How reported maps are compared
==============================

The graph-reasoning variant asks the explorer to report the map it has
uncovered. The report is compared to the true visited subgraph by graph
edit distance, squashed into a 0-100 similarity.
"""

import numpy as np

from dialoguebench.metrics import LabeledGraph, graph_edit_distance, similarity_from_distance

# similarity falls off quickly: one edit already costs a quarter
for d in range(7):
    print(d, round(similarity_from_distance(d), 2))

# a truth graph: a corridor of three rooms
truth = LabeledGraph.build(["Kitchen", "Bar", "Closet"], [(0, 1), (1, 2)])

# a report that forgot a connection, one that mislabelled a room, and an empty one
reports = {
    "missing edge": LabeledGraph.build(["Kitchen", "Bar", "Closet"], [(0, 1)]),
    "wrong label": LabeledGraph.build(["Kitchen", "Bar", "Nursery"], [(0, 1), (1, 2)]),
    "empty": LabeledGraph.build([], []),
}
for name, g in reports.items():
    d = graph_edit_distance(g, truth)
    print(f"{name:12s} distance {d}  similarity {similarity_from_distance(d):.2f}")

# repeated labels are fine: the search matches rooms, not names
rng = np.random.default_rng(0)
twins = LabeledGraph.build(["Bar", "Bar", "Bar"], [(0, 1), (1, 2)])
shuffled = LabeledGraph.build(["Bar", "Bar", "Bar"], [(0, 2), (2, 1)])
print("isomorphic twins:", graph_edit_distance(twins, shuffled))
