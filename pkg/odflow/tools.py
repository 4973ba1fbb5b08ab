"""
    tools module.

    Reading and writing of experiment directories: flow series, tensors and
    histograms as CSV, and a manifest.json holding the configuration, the
    seeds, the package versions and a digest of every data file.

    A ground-truth directory holds
        network.txt  path_flows.csv  x.csv  s.csv  y.csv  P.csv  manifest.json
    and an estimate directory
        network.txt  x.csv  x_full.csv  s.csv  P.csv  report.json
        manifest.json
"""
import csv
import hashlib
import json
import logging
import os
from dataclasses import fields

import numpy as np

from .flowmodel import (AssignmentTensor, FlowSeries, PathFlowSeries,
                        path_to_od)
from .network import dump_edge_list, enumerate_paths, load_edge_list
from .odflowerrors import FlowError, InputError
from .synth import GenConfig, GroundTruth
from .utils import versions

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
NETWORK_FILE = "network.txt"
REPORT_FILE = "report.json"


def _require_dir(directory):
    if not os.path.isdir(directory):
        raise InputError("no such directory: %s" % directory)


def _open(path, mode="r"):
    try:
        return open(path, mode, newline="" if "b" not in mode else None)
    except IOError as e:
        raise InputError("cannot open %s: %s" % (path, e))


def write_flow_csv(path, series):
    """ Header entity,<t_begin>,...,<t_end>, one row per entity """
    labels = series.labels or ["%i" % (k + 1)
                               for k in range(series.entity_count)]
    with _open(path, "w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["entity"] + [str(t) for t in series.times])
        for label, row in zip(labels, series.values):
            w.writerow([label] + [repr(float(v)) for v in row])


def read_flow_csv(path, cls=FlowSeries):
    with _open(path) as f:
        rows = list(csv.reader(f))
    if not rows or rows[0][:1] != ["entity"]:
        raise InputError("%s is not a flow file" % path)
    try:
        times = [int(t) for t in rows[0][1:]]
        values = np.array([[float(v) for v in row[1:]] for row in rows[1:]],
                          dtype=float).reshape(len(rows) - 1, len(times))
    except ValueError as e:
        raise InputError("malformed flow file %s: %s" % (path, e))
    if times and times != list(range(times[0], times[0] + len(times))):
        raise InputError("%s: intervals are not consecutive" % path)
    return cls(values, times[0] if times else 1, [row[0] for row in rows[1:]])


def write_tensor_csv(path, P):
    """ Header step,link,origin,value; one row per support entry, link as
    its 1-based index and origin as its 1-based node id.
    """
    steps, links, cols = np.nonzero(P.support)
    with _open(path, "w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["step", "link", "origin", "value"])
        for k, l, j in zip(steps, links, cols):
            w.writerow([k + 1, l + 1, P.origins[j] + 1,
                        repr(float(P.values[k, l, j]))])


def read_tensor_csv(path, net, origins, tau_max, kind="origin"):
    """ AssignmentTensor from a tensor file; the rows define the support """
    position = dict((o, k) for k, o in enumerate(origins))
    values = np.zeros((tau_max, net.n_links, len(origins)))
    support = np.zeros(values.shape, dtype=bool)
    with _open(path) as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != ["step", "link", "origin", "value"]:
            raise InputError("%s is not a tensor file" % path)
        for lineno, row in enumerate(reader, 2):
            try:
                k, l, o = int(row[0]) - 1, int(row[1]) - 1, int(row[2]) - 1
                value = float(row[3])
                j = position[o]
            except (ValueError, IndexError, KeyError):
                raise InputError("%s line %i: bad entry %r"
                                 % (path, lineno, row))
            if not (0 <= k < tau_max and 0 <= l < net.n_links):
                raise InputError("%s line %i: entry outside the tensor"
                                 % (path, lineno))
            values[k, l, j] = value
            support[k, l, j] = True
    return AssignmentTensor(net, origins, values, support, kind)


def write_histogram_csv(path, hist):
    with _open(path, "w") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["bin_left", "bin_right", "percent"])
        for left, right, percent in hist.rows():
            w.writerow([repr(left), repr(right), repr(percent)])


def write_json(path, content):
    with _open(path, "w") as f:
        json.dump(content, f, indent=2, sort_keys=True)
        f.write("\n")


def read_json(path):
    try:
        with _open(path) as f:
            return json.load(f)
    except ValueError as e:
        raise InputError("%s is not valid JSON: %s" % (path, e))


def file_digest(path):
    h = hashlib.sha256()
    with _open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_hash(manifest):
    """ SHA-256 of the canonical JSON form, manifest_hash itself left out """
    content = dict((k, v) for k, v in manifest.items() if k != "manifest_hash")
    text = json.dumps(content, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def write_manifest(directory, content):
    """ Writes manifest.json with the digests of every other file of the
    directory. Returns the manifest hash.
    """
    manifest = dict(content)
    manifest.setdefault("versions", versions())
    manifest["files"] = dict(
        (name, file_digest(os.path.join(directory, name)))
        for name in sorted(os.listdir(directory))
        if name != MANIFEST and os.path.isfile(os.path.join(directory, name)))
    manifest["manifest_hash"] = manifest_hash(manifest)
    write_json(os.path.join(directory, MANIFEST), manifest)
    logger.debug("manifest of %s: %s", directory, manifest["manifest_hash"])
    return manifest["manifest_hash"]


def read_manifest(directory, verify=True):
    _require_dir(directory)
    path = os.path.join(directory, MANIFEST)
    if not os.path.exists(path):
        raise InputError("%s has no %s" % (directory, MANIFEST))
    manifest = read_json(path)
    if verify:
        for name, digest in manifest.get("files", {}).items():
            if file_digest(os.path.join(directory, name)) != digest:
                raise InputError("%s was modified after the manifest was "
                                 "written" % os.path.join(directory, name))
    return manifest


def _read_network(directory, name):
    path = os.path.join(directory, NETWORK_FILE)
    with _open(path) as f:
        return load_edge_list(f.read(), name=name)


def _write_network(directory, net):
    with _open(os.path.join(directory, NETWORK_FILE), "w") as f:
        f.write(dump_edge_list(net))


def save_ground_truth(truth, directory, extra=None):
    """ Writes a ground-truth directory, returns its manifest hash """
    os.makedirs(directory, exist_ok=True)
    _write_network(directory, truth.network)
    write_flow_csv(os.path.join(directory, "path_flows.csv"),
                   truth.path_flows)
    write_flow_csv(os.path.join(directory, "x.csv"), truth.x)
    write_flow_csv(os.path.join(directory, "s.csv"), truth.s)
    write_flow_csv(os.path.join(directory, "y.csv"), truth.y)
    write_tensor_csv(os.path.join(directory, "P.csv"), truth.P)
    content = {"kind": "ground-truth",
               "network": truth.network.name,
               "generator": truth.config.to_dict(),
               "seed": truth.config.seed}
    content.update(extra or {})
    return write_manifest(directory, content)


def _splits(paths, path_flows):
    totals = path_flows.values.sum(axis=1)
    path_od = paths.path_od()
    od_totals = np.bincount(path_od, weights=totals,
                            minlength=len(paths.od_pairs))
    od_origin = np.array([paths.origin_index(o) for o, _ in paths.od_pairs],
                         dtype=int)
    origin_totals = np.bincount(od_origin, weights=od_totals,
                                minlength=len(paths.origins))
    with np.errstate(divide="ignore", invalid="ignore"):
        path_split = np.where(od_totals[path_od] > 0,
                              totals / od_totals[path_od], 0.0)
        od_split = np.where(origin_totals[od_origin] > 0,
                            od_totals / origin_totals[od_origin], 0.0)
    return od_split, path_split


def load_ground_truth(directory):
    """ GroundTruth of a directory written by save_ground_truth.

    The path set is enumerated again from the stored network; the split
    shares are recomputed from the path flows.
    """
    manifest = read_manifest(directory)
    if manifest.get("kind") != "ground-truth":
        raise InputError("%s is not a ground-truth directory" % directory)
    cfg = GenConfig.from_dict(manifest["generator"])
    net = _read_network(directory, manifest.get("network", ""))
    paths = enumerate_paths(net, cfg.tau_max)
    path_flows = read_flow_csv(os.path.join(directory, "path_flows.csv"),
                               PathFlowSeries)
    labels = [p.label() for p in paths.paths]
    if list(path_flows.labels) != labels:
        raise FlowError("path flows of %s do not follow the path set of its "
                        "network" % directory)
    x = read_flow_csv(os.path.join(directory, "x.csv"))
    s = read_flow_csv(os.path.join(directory, "s.csv"))
    y = read_flow_csv(os.path.join(directory, "y.csv"))
    P = read_tensor_csv(os.path.join(directory, "P.csv"), net, paths.origins,
                        cfg.tau_max)
    _, A = path_to_od(paths, path_flows)
    od_split, path_split = _splits(paths, path_flows)
    return GroundTruth(cfg, net, paths, P, A, x, s, y, path_flows, od_split,
                       path_split)


def read_link_flows(directory):
    """ Network and link flows of an input directory, for solving """
    _require_dir(directory)
    manifest = read_manifest(directory)
    net = _read_network(directory, manifest.get("network", ""))
    return manifest, net, read_flow_csv(os.path.join(directory, "y.csv"))


def save_estimate(estimate, paths, directory, extra=None, max_points=None):
    """ Writes an estimate directory, returns its manifest hash """
    os.makedirs(directory, exist_ok=True)
    _write_network(directory, paths.network)
    write_flow_csv(os.path.join(directory, "x.csv"), estimate.x)
    write_flow_csv(os.path.join(directory, "x_full.csv"), estimate.x_full)
    write_flow_csv(os.path.join(directory, "s.csv"), estimate.od)
    write_tensor_csv(os.path.join(directory, "P.csv"), estimate.P)
    write_json(os.path.join(directory, REPORT_FILE),
               estimate.report.to_dict(max_points))
    content = {"kind": "estimate", "network": paths.network.name,
               "tau_max": paths.tau_max, "mode": estimate.report.mode}
    content.update(extra or {})
    return write_manifest(directory, content)


def load_estimate(directory):
    """ Estimate of a directory written by save_estimate """
    from .solver import Estimate, SolveReport
    manifest = read_manifest(directory)
    if manifest.get("kind") != "estimate":
        raise InputError("%s is not an estimate directory" % directory)
    net = _read_network(directory, manifest.get("network", ""))
    tau_max = int(manifest["tau_max"])
    paths = enumerate_paths(net, tau_max)
    x = read_flow_csv(os.path.join(directory, "x.csv"))
    x_full = read_flow_csv(os.path.join(directory, "x_full.csv"))
    od = read_flow_csv(os.path.join(directory, "s.csv"))
    P = read_tensor_csv(os.path.join(directory, "P.csv"), net, paths.origins,
                        tau_max)
    known = set(f.name for f in fields(SolveReport))
    raw = read_json(os.path.join(directory, REPORT_FILE))
    report = SolveReport(**dict((k, v) for k, v in raw.items() if k in known))
    return Estimate(P, x, x_full, od, report)


def path_set_of(directory):
    """ PathSet of a ground-truth or estimate directory """
    manifest = read_manifest(directory, verify=False)
    net = _read_network(directory, manifest.get("network", ""))
    tau_max = manifest.get("tau_max") or manifest["generator"]["tau_max"]
    return enumerate_paths(net, int(tau_max))
