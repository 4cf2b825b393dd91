"""Canned experiments, output files and the result manifest.

Outputs are written into a private staging directory and moved into
place only when the run succeeds. A failing run leaves its partial files
under ``<out>/quarantine/<timestamp>`` instead.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import shutil
import time
from dataclasses import dataclass

import numpy as np

from .. import __version__
from ..arithmetic import Frequency
from ..cocycle import large_deviation_profile, localized_interval, lyapunov_scan
from ..entanglement import area_law_fit, entropy_scaling_study, projection_decay_study
from ..lattice import ExpDecay, Laplacian
from ..maryland import MarylandParams, maryland_verify, write_verify_csv
from ..potentials import (AlmostMathieu, DyadicCosine, Free, LocallyConstant, Maryland,
                          MonotoneSawtooth, SubshiftPotential, TorusCosine)
from ..spectral import EnergyWindow
from ..subshift import (SubshiftSpec, bounded_distortion_ratio, cylinder_measure,
                        mixing_profile, sample_path)
from .config import ExperimentConfig


@dataclass
class ResultManifest:
    config: dict
    version: str
    wall_clock: float
    seeds: dict
    files: dict

    def as_dict(self) -> dict:
        return {"config": self.config, "version": self.version, "wall_clock_s": self.wall_clock,
                "seeds": self.seeds, "files": self.files}


def build_potential(cfg: ExperimentConfig):
    fam = cfg["potential.family"]
    g = cfg["potential.g"]
    if fam == "free":
        return Free(cfg["potential.dim"])
    if fam == "doubling":
        return SubshiftPotential(SubshiftSpec.full_shift(2), DyadicCosine(), g)
    if fam == "cat":
        from ..subshift import TorusMap

        return SubshiftPotential(TorusMap("cat"), TorusCosine(), g)
    if fam == "subshift":
        spec = SubshiftSpec(np.array(cfg["potential.P"]))
        vals = cfg["potential.values"]
        if len(vals) != spec.k:
            raise ValueError("potential.values must have one entry per letter")
        return SubshiftPotential(spec, LocallyConstant(tuple(vals)), g)
    alpha = Frequency.parse(cfg["potential.alpha"])
    if fam == "maryland":
        return Maryland(g, alpha)
    if fam == "almost-mathieu":
        return AlmostMathieu(g, alpha)
    return MonotoneSawtooth(g, alpha, cfg["potential.xi"], tuple(cfg["potential.slopes"]))


def build_kernel(cfg: ExperimentConfig):
    if cfg.get("kernel.type", "laplacian") == "laplacian":
        return Laplacian()
    return ExpDecay(cfg["kernel.amplitude"], cfg["kernel.rate"])


def _r(x) -> str:
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=float)
        fh.write("\n")


def _task_seeds(seed: int, count: int) -> list:
    return [{"task": k, "entropy": seed, "spawn_key": [k]} for k in range(count)]


# --- experiments -------------------------------------------------------------


def _entropy_scaling(cfg, seed, jobs, out):
    spec = build_potential(cfg)
    curve = entropy_scaling_study(spec, cfg["eps_f"], cfg["L"], cfg["samples"], seed,
                                  kernel=build_kernel(cfg), host_margin=cfg["host_margin"],
                                  stratified=cfg["stratified"], jobs=jobs)
    _write_csv(os.path.join(out, "entropy_curve.csv"), ["L", "mean_S", "stderr", "samples"],
               [[int(L), _r(m), _r(s), curve.samples] for L, m, s in zip(curve.L, curve.mean, curve.stderr)])
    v = area_law_fit(curve, getattr(spec, "dim", 1), cfg["thresholds.area_tol"],
                     cfg["thresholds.enhanced_r2"], cfg["thresholds.volume_rel"])
    _write_json(os.path.join(out, "verdict.json"), v.__dict__)
    return curve.samples


def _projection_decay(cfg, seed, jobs, out):
    spec = build_potential(cfg)
    win = EnergyWindow(*cfg["window"]) if cfg["window"] is not None else None
    st = projection_decay_study(spec, cfg["eps_f"], cfg["distances"], cfg["samples"], seed,
                                window=win, host_half=cfg["host_half"], kernel=build_kernel(cfg),
                                fit_range=tuple(cfg["fit_range"]), stratified=cfg["stratified"], jobs=jobs)
    _write_csv(os.path.join(out, "decay.csv"), ["n", "mean_abs_P", "stderr_P", "mean_Q", "stderr_Q"],
               [[int(n), _r(a), _r(b), _r(c), _r(d)] for n, a, b, c, d in
                zip(st.distances, st.mean_P, st.stderr_P, st.mean_Q, st.stderr_Q)])
    _write_json(os.path.join(out, "fits.json"), {
        "P": st.fit_P.as_dict() if st.fit_P else None,
        "Q": st.fit_Q.as_dict() if st.fit_Q else None,
        "filling": st.filling})
    return st.samples


def _lyapunov_scan(cfg, seed, jobs, out):
    spec = build_potential(cfg)
    lo, hi, cnt = cfg["energies"]
    scan = lyapunov_scan(np.linspace(lo, hi, int(cnt)), spec, cfg["steps"], cfg["samples"], seed)
    _write_csv(os.path.join(out, "lyapunov_scan.csv"), ["lambda", "gamma", "stderr", "samples", "steps"],
               [[_r(e), _r(g), _r(s), scan.samples, scan.steps]
                for e, g, s in zip(scan.energies, scan.gamma, scan.stderr)])
    ivs = localized_interval(scan, cfg["gamma_min"])
    _write_json(os.path.join(out, "intervals.json"), [[w.lo, w.hi] for w in ivs])
    return cfg["samples"]


def _large_deviation(cfg, seed, jobs, out):
    spec = build_potential(cfg)
    tails = large_deviation_profile(cfg["energy"], spec, cfg["eps"], cfg["n_list"], cfg["samples"],
                                    seed, gamma_ref=cfg["gamma_ref"], subwindows=cfg["subwindows"],
                                    ref_steps=cfg["ref_steps"])
    _write_csv(os.path.join(out, "large_deviation.csv"), ["n", "tail", "samples"],
               [[n, _r(p), cfg["samples"]] for n, p in tails.items()])
    return cfg["samples"] * len(tails)


def _maryland_verify(cfg, seed, jobs, out):
    spec = build_potential(cfg)
    params = MarylandParams(spec.g, spec.alpha, cfg["omega"], cfg["quadrature_order"])
    a, b = cfg["labels"]
    rows = maryland_verify(params, range(a, b + 1), cfg["half_width"])
    write_verify_csv(rows, os.path.join(out, "maryland_verify.csv"))
    _write_json(os.path.join(out, "summary.json"), {
        "max_abs_error": max(r.error for r in rows),
        "min_overlap": min(r.overlap for r in rows),
        "max_residual": max(r.residual for r in rows)})
    return 0


def cylinder_codes(spec: SubshiftSpec, m: int, count: int, seed) -> np.ndarray:
    """Codes of ``count`` nearly independent length-``m`` words from one path."""
    r = spec.second_eigenvalue_modulus()
    stride = m + (int(math.ceil(math.log(1e-10) / math.log(r))) if r > 0 else 1)
    path = sample_path(spec, seed).word(0, stride * count - 1).reshape(count, stride)[:, :m]
    return path @ (spec.k ** np.arange(m - 1, -1, -1))


def _subshift_stats(cfg, seed, jobs, out):
    spec = SubshiftSpec(np.array(cfg["P"]))
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    resid = float(np.abs(spec.p @ spec.P - spec.p).max())
    # empirical word frequencies: words read at a stride long enough for the
    # chain to decorrelate (r^stride <= 1e-10), so the counts are ~independent
    m = cfg["word_length"]
    W = cfg["window"]
    codes = cylinder_codes(spec, m, W, np.random.SeedSequence(seed).spawn(1)[0])
    counts = np.bincount(codes, minlength=spec.k**m)
    rows = []
    worst_add = 0.0
    for code in range(spec.k**m):
        word = np.unravel_index(code, (spec.k,) * m)
        mu = cylinder_measure(spec, 0, word)
        add = sum(cylinder_measure(spec, 0, (*word, a)) for a in range(spec.k))
        worst_add = max(worst_add, abs(add - mu))
        sigma = math.sqrt(max(mu * (1 - mu), 1e-300) / W)
        rows.append(["".join(map(str, word)), _r(mu), _r(counts[code] / W), _r((counts[code] / W - mu) / sigma)])
    _write_csv(os.path.join(out, "cylinders.csv"), ["word", "measure", "empirical", "z"], rows)
    prof = mixing_profile(spec, cfg["m_max"])
    _write_csv(os.path.join(out, "mixing.csv"), ["m", "max_dev"],
               [[i + 1, _r(x)] for i, x in enumerate(prof)])
    ratios = []
    for _ in range(cfg["distortion_pairs"]):
        l1, l2 = rng.integers(1, 4, size=2)
        w1 = sample_path(spec, rng).word(0, int(l1) - 1)
        w2 = sample_path(spec, rng).word(0, int(l2) - 1)
        gap = int(rng.integers(1, 6))
        r = bounded_distortion_ratio(spec, (0, w1), (int(l1) - 1 + gap, w2))
        if not r.empty:
            ratios.append(r.ratio)
    ok = prof > 1e-14
    rate = float(np.exp(np.polyfit(np.arange(1, len(prof) + 1)[ok], np.log(prof[ok]), 1)[0])) if ok.sum() >= 2 else 0.0
    _write_json(os.path.join(out, "subshift_stats.json"), {
        "stationary": spec.p.tolist(), "stationary_residual": resid,
        "cylinder_additivity_error": worst_add,
        "max_abs_z": max(abs(float(r[3])) for r in rows),
        "second_eigenvalue_modulus": spec.second_eigenvalue_modulus(),
        "mixing_rate": rate,
        "distortion_min": min(ratios) if ratios else None,
        "distortion_max": max(ratios) if ratios else None})
    return cfg["distortion_pairs"]


RUNNERS = {
    "entropy-scaling": _entropy_scaling,
    "projection-decay": _projection_decay,
    "lyapunov-scan": _lyapunov_scan,
    "large-deviation": _large_deviation,
    "maryland-verify": _maryland_verify,
    "subshift-stats": _subshift_stats,
}


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def run(cfg: ExperimentConfig, out_dir: str, seed: int | None = None, jobs: int | None = None) -> ResultManifest:
    """Run one experiment and write its artifacts plus ``manifest.json``."""
    seed = cfg["seed"] if seed is None else seed
    jobs = cfg["jobs"] if jobs is None else jobs
    os.makedirs(out_dir, exist_ok=True)
    stage = os.path.join(out_dir, f".staging-{os.getpid()}")
    shutil.rmtree(stage, ignore_errors=True)
    os.makedirs(stage)
    t0 = time.time()
    try:
        ntasks = RUNNERS[cfg.experiment](cfg, seed, jobs, stage)
    except BaseException:
        base = os.path.join(out_dir, "quarantine", time.strftime("%Y%m%dT%H%M%S"))
        qdir, k = base, 1
        while os.path.exists(qdir):
            qdir, k = f"{base}-{k}", k + 1
        os.makedirs(os.path.dirname(qdir), exist_ok=True)
        shutil.move(stage, qdir)
        raise
    files = {}
    for name in sorted(os.listdir(stage)):
        dst = os.path.join(out_dir, name)
        os.replace(os.path.join(stage, name), dst)
        files[name] = _digest(dst)
    os.rmdir(stage)
    echo = cfg.echo()
    echo["seed"], echo["jobs"] = seed, jobs
    man = ResultManifest(echo, __version__, time.time() - t0,
                         {"master": seed, "tasks": _task_seeds(seed, ntasks)}, files)
    _write_json(os.path.join(out_dir, "manifest.json"), man.as_dict())
    return man
