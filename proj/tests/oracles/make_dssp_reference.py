#!/usr/bin/env python3
"""Writes a three-state reference assignment for one chain using pydssp.

    python3 tests/oracles/make_dssp_reference.py tests/data/pdb/1isp.pdb A \
        tests/data/dssp/1ispA.pdb.dssp

Output matches the fixtures in tests/data/dssp: one line holding a string of
H / E / - per residue, followed by the source file name. Residues lacking
any of N, CA, C, O are written as '-'.
"""
import sys

import numpy as np
import pydssp


def backbone(path, chain):
    residues = {}
    order = []
    done = False
    for line in open(path):
        if line.startswith("ENDMDL"):
            done = True
        if done or not line.startswith("ATOM") or line[21] != chain:
            continue
        if line[17:20] in ("HOH", "WAT"):
            continue
        key = (int(line[22:26]), line[26])
        name = line[12:16].strip()
        if key not in residues:
            residues[key] = {}
            order.append(key)
        if name in ("N", "CA", "C", "O") and name not in residues[key]:
            residues[key][name] = [float(line[30:38]), float(line[38:46]), float(line[46:54])]
    return [residues[k] for k in sorted(order)]


def main():
    path, chain, out = sys.argv[1], sys.argv[2], sys.argv[3]
    res = backbone(path, chain)
    complete = [all(a in r for a in ("N", "CA", "C", "O")) for r in res]
    coords = np.array([[r[a] for a in ("N", "CA", "C", "O")] for r, ok in zip(res, complete) if ok])
    ss = pydssp.assign(coords, out_type="c3")
    it = iter(ss)
    text = "".join(next(it) if ok else "-" for ok in complete)
    with open(out, "w") as f:
        f.write("%s %s\n" % (text, path.split("/")[-1]))


if __name__ == "__main__":
    main()
