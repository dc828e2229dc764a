"""Regenerate the bundled fixture files under src/scmap/fixtures/."""

import csv
import json
from pathlib import Path

OUT = Path(__file__).resolve().parent.parent / "src" / "scmap" / "fixtures"

NSF_LINKS = [
    (1, 2), (1, 3), (1, 8), (2, 3), (2, 4), (3, 6), (4, 5), (4, 11), (5, 6),
    (5, 7), (6, 10), (6, 13), (7, 8), (8, 9), (9, 10), (9, 12), (9, 14),
    (11, 12), (11, 14), (12, 13), (13, 14),
]

# 11-node European core, 22 links. 01 London, 02 Paris, 03 Zurich, 04 Milan,
# 05 Vienna, 06 Prague, 07 Berlin, 08 Copenhagen, 09 Amsterdam, 10 Brussels,
# 11 Luxembourg.
COST239_LINKS = [
    (1, 2), (1, 8), (1, 9), (1, 10), (2, 3), (2, 4), (2, 10), (2, 11),
    (3, 4), (3, 5), (3, 11), (4, 5), (5, 6), (5, 7), (6, 7), (6, 8),
    (7, 8), (7, 9), (8, 9), (9, 10), (9, 11), (10, 11),
]


def write_topology(path, name, n_nodes, links, capacity, cores):
    nodes = [{"id": f"{i:02d}", "nfv": True, "cores": cores} for i in range(1, n_nodes + 1)]
    data = {
        "name": name,
        "nodes": nodes,
        "links": [
            {"a": f"{a:02d}", "b": f"{b:02d}", "capacity_gbps": capacity} for a, b in links
        ],
    }
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2)
        fh.write("\n")


def write_mesh_demands(path, n_nodes, chain, gbps):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "chain", "gbps"])
        for s in range(1, n_nodes + 1):
            for d in range(1, n_nodes + 1):
                if s != d:
                    w.writerow([f"{s:02d}", f"{d:02d}", chain, gbps])


def main():
    OUT.mkdir(parents=True, exist_ok=True)

    write_topology(OUT / "nsfnet.topology.json", "nsfnet", 14, NSF_LINKS, 100000.0, 100000)
    write_topology(OUT / "cost239.topology.json", "cost239", 11, COST239_LINKS, 100000.0, 100000)
    write_mesh_demands(OUT / "nsfnet_mesh.demands.csv", 14, "sc3", 1.0)
    write_mesh_demands(OUT / "cost239_mesh.demands.csv", 11, "sc3", 1.0)
    with open(OUT / "chain3.chains.json", "w") as fh:
        json.dump(
            {
                "vnfs": [
                    {"id": "fw", "cores_per_gbps": 1.0},
                    {"id": "dpi", "cores_per_gbps": 1.0},
                    {"id": "nat", "cores_per_gbps": 1.0},
                ],
                "chains": [{"id": "sc3", "vnfs": ["fw", "dpi", "nat"]}],
            },
            fh,
            indent=2,
        )
        fh.write("\n")

    # small triangle used by tests and docs
    with open(OUT / "triangle.topology.json", "w") as fh:
        json.dump(
            {
                "name": "triangle",
                "nodes": [
                    {"id": "a", "nfv": True, "cores": 1000},
                    {"id": "b", "nfv": True, "cores": 1000},
                    {"id": "c", "nfv": True, "cores": 1000},
                ],
                "links": [
                    {"a": "a", "b": "b", "capacity_gbps": 1000.0},
                    {"a": "b", "b": "c", "capacity_gbps": 1000.0},
                    {"a": "c", "b": "a", "capacity_gbps": 1000.0},
                ],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    with open(OUT / "triangle.chains.json", "w") as fh:
        json.dump(
            {
                "vnfs": [
                    {"id": "fw", "cores_per_gbps": 1.0},
                    {"id": "dpi", "cores_per_gbps": 2.0},
                ],
                "chains": [
                    {"id": "c1", "vnfs": ["fw"]},
                    {"id": "c2", "vnfs": ["fw", "dpi"]},
                ],
            },
            fh,
            indent=2,
        )
        fh.write("\n")
    with open(OUT / "triangle.demands.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["src", "dst", "chain", "gbps"])
        for s in "abc":
            for d in "abc":
                if s != d:
                    w.writerow([s, d, "c1", 1.0])

    print("fixtures written to", OUT)


if __name__ == "__main__":
    main()
