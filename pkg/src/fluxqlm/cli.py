"""Command-line front end.

Each subcommand resolves a RunConfig, runs one job and writes a report
bundle (CSV tables, JSON metadata, optional SVG plots) into the output
directory. Files are written atomically.
"""
from __future__ import annotations

import argparse
import math
import sys
import time
import traceback
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import RunConfig, default_config, emit, parse_config, parse_units
from .device import DeviceParams, qutrit_states
from .errors import ConfigError, FluxQLMError
from .formats import atomic_write, csv_text, read_state, state_bytes, write_json
from .lattice import build_ladder, build_square, middle_plaquette, thooft_path, wilson_path
from .model import (build_h_eff, build_h_imp, build_h_qlm, gauge_basis, hop_moves, sector_basis,
                    sz2_total)
from .network import (NetworkParams, converged_spectrum, derive_couplings, driven_couplings,
                      optimize_drive, stark_shift)
from .observe import StateVector, expect_thooft, expect_wilson, gauss_density
from .plotting import config_hash, plot_columns
from .readout import (FidelityParams, fidelity_gp, fidelity_sp, inhomogeneity_error, mean_gate_time,
                      per_spin_penalty, thooft_protocol, transcript_json, wilson_protocol)
from .solver import solve_lowest, sweep

ENERGY_CONTROLS = ("g2_elec", "v", "u", "j")


@dataclass
class ReportBundle:
    tables: dict = field(default_factory=dict)   # name -> (header, rows)
    meta: dict = field(default_factory=dict)
    svgs: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)    # file name -> bytes or str

    def write(self, out: Path) -> list:
        out = Path(out)
        written = []
        for name, (header, rows) in self.tables.items():
            written.append(atomic_write(out / f"{name}.csv", csv_text(header, rows)))
        for name, svg in self.svgs.items():
            written.append(atomic_write(out / f"{name}.svg", svg))
        for name, data in self.extra.items():
            written.append(atomic_write(out / name, data))
        written.append(write_json(out / "meta.json", self.meta))
        return written


# builders -----------------------------------------------------------------------

def device_params(cfg: RunConfig, which: str) -> DeviceParams:
    d = cfg[f"device.{which}"]
    return DeviceParams(d["e_c"], d["e_j"], d["e_l"], d["phi_off"])


def network_params(cfg: RunConfig) -> NetworkParams:
    n = cfg["network"]
    link, anc = device_params(cfg, "link"), device_params(cfg, "ancilla")
    if n["xi"] > 0:  # xi takes precedence; e_cc is then derived from it
        return NetworkParams(link, anc, n["e_cl"], xi=n["xi"])
    return NetworkParams(link, anc, n["e_cl"], e_cc=n["e_cc"])


def geometry(cfg: RunConfig):
    g = cfg["geometry"]
    if g["kind"] == "ladder":
        return build_ladder(g["l"])
    return build_square(g["nx"], g["ny"], g["boundary"])


def paths(cfg: RunConfig, geo):
    """('t Hooft string or None off ladders, Wilson loop)."""
    g = cfg["geometry"]
    s = None
    if geo.kind == "ladder":
        target = g["string_target"] if g["string_target"] >= 0 else middle_plaquette(geo)
        s = thooft_path(geo, target, cfg["run"]["string_convention"])
    gauss = cfg["run"]["gauss"]
    loop = wilson_path(geo, g["loop_corner"], g["loop_width"], g["loop_height"], gauss)
    return s, loop


def hamiltonian_factory(cfg: RunConfig, geo):
    """(builder(x), basis) for the configured Hamiltonian and control variable."""
    sw = cfg["sweep"]
    gauss = cfg["run"]["gauss"]
    kind, control = sw["hamiltonian"], sw["control"]
    gb = gauge_basis(geo, gauss)
    if kind == "imp":
        depth = sw["basis_depth"] or None
        basis = sector_basis(geo, gb, hop_moves(geo, gauss, 1.0), depth)
    else:
        basis = gb

    def params(x):
        p = {k: sw[k] for k in ("g2_elec", "g2_mag", "v", "u", "j")}
        p[control] = x
        return p

    def build(x):
        p = params(x)
        if kind == "qlm":
            return build_h_qlm(geo, basis, p["g2_elec"], p["g2_mag"], gauss)
        if kind == "imp":
            return build_h_imp(geo, p["v"], p["u"], p["j"], basis, gauss)
        return build_h_eff(geo, p["v"], p["u"], p["j"], basis, gauss, form=sw["form"])

    return build, basis


def observable_fns(cfg: RunConfig, geo) -> dict:
    string, loop = paths(cfg, geo)
    gauss = cfg["run"]["gauss"]

    def gd(psi: StateVector) -> float:
        if psi.basis.tag == "gauge_sector":
            return 0.0
        return gauss_density(psi, geo, gauss)

    table = {
        "thooft_pi": lambda psi: expect_thooft(psi, string, math.pi).real,
        "thooft_half": lambda psi: expect_thooft(psi, string, math.pi / 2).real,
        "wilson_re": lambda psi: expect_wilson(psi, loop).real,
        "wilson_im": lambda psi: expect_wilson(psi, loop).imag,
        "gauss_density": gd,
        "sz2": lambda psi: float(np.abs(psi.amplitudes) ** 2 @ sz2_total(psi.basis)) / geo.n_links,
    }
    wanted = cfg["sweep"]["observables"]
    if string is None and any(k.startswith("thooft") for k in wanted):
        raise ConfigError("'t Hooft observables need a ladder geometry")
    return {k: table[k] for k in wanted}


# jobs ---------------------------------------------------------------------------

def job_device_spectrum(cfg: RunConfig) -> ReportBundle:
    sc = cfg.unit_scale
    rows = []
    meta = {}
    for which in ("link", "ancilla"):
        p = device_params(cfg, which)
        dim = cfg[f"device.{which}"]["dim"]
        s = converged_spectrum(p) if dim == 0 else converged_spectrum(p, dim=dim, max_dim=dim)
        for i, e in enumerate(s.energies[:12]):
            rows.append([which, i, float(e) * sc])
        info = {"dim": s.dim, "converged": bool(s.converged), "beta": s.beta}
        if which == "link":
            q = qutrit_states(s)
            info.update(splitting_v=q.splitting_v * sc, doublet_splitting=q.doublet_splitting * sc)
        else:
            info["gap"] = float(s.energies[1] - s.energies[0]) * sc
        meta[which] = info
    return ReportBundle({"spectrum": (["device", "level", "energy"], rows)}, {"device": meta})


def job_couplings(cfg: RunConfig) -> ReportBundle:
    net = network_params(cfg)
    cs = derive_couplings(net, charge_element=cfg["network"]["charge_element"])
    drive = None
    dr = cfg["drive"]
    if dr["enabled"]:
        link = net.link.with_e_l(net.link.e_l + 2.0 * net.e_cl)
        s = converged_spectrum(link)
        q = qutrit_states(s)
        ej = net.link.e_j
        d = optimize_drive(q, s, (dr["omega_center"] * ej * dr["omega_lo"], dr["omega_center"] * ej * dr["omega_hi"]),
                           (dr["g2_center"] * ej ** 2 * dr["g2_lo"], dr["g2_center"] * ej ** 2 * dr["g2_hi"]))
        st = stark_shift(q, s, d)
        cs = driven_couplings(cs, st)
        drive = {"omega_f_over_ej": d.omega_f / ej, "g2_over_ej2": d.g_strength ** 2 / ej ** 2,
                 "v_prime": st.v_prime}
    sc = cfg.unit_scale
    out = {k: (v * sc if k in ("delta", "u", "v", "j", "g2_elec", "g2_mag_inv") else v)
           for k, v in cs.as_dict().items()}
    out["unit"] = cfg["run"]["units"]
    header = ["delta", "u", "v", "j", "j_over_u", "g2_elec", "g2_mag_inv", "product"]
    return ReportBundle({"couplings": (header, [[out[h] for h in header]])},
                        {"couplings": out, "drive": drive,
                         "provenance": {k: v for k, v in cs.provenance.items()}})


def job_sweep(cfg: RunConfig, parallel: bool = False) -> ReportBundle:
    geo = geometry(cfg)
    build, basis = hamiltonian_factory(cfg, geo)
    obs = observable_fns(cfg, geo)
    grid = cfg.grid()
    recs = sweep(build, grid, obs, seed=cfg["run"]["seed"], warm_start=cfg["sweep"]["warm_start"],
                 parallel=parallel)
    sc = cfg.unit_scale
    control = cfg["sweep"]["control"]
    csc = sc if control in ENERGY_CONTROLS else 1.0
    header = [control, "e0", "gap", "degenerate"] + list(obs) + ["error"]
    rows = [[r.control * csc, r.e0 * sc, r.gap * sc, r.degenerate]
            + [r.observables.get(k, math.nan) for k in obs] + [r.error or ""] for r in recs]
    b = ReportBundle({"sweep": (header, rows)},
                     {"basis_dim": basis.dim, "basis_tag": basis.tag, "grid_size": len(grid)})
    if cfg["output"]["plots"]:
        b.svgs = plot_columns(header, rows, control, list(obs) + ["gap"], config_hash(emit(cfg)),
                              cfg["output"]["log_x"] and all(x > 0 for x in grid))
        if not b.svgs:
            b.meta["plot_notice"] = "fewer than two rows; plots skipped"
    return b


def _ground(cfg: RunConfig):
    geo = geometry(cfg)
    build, basis = hamiltonian_factory(cfg, geo)
    x = cfg["sweep"][cfg["sweep"]["control"]]
    r = solve_lowest(build(x), k=2, seed=cfg["run"]["seed"])
    return geo, r


def job_observe(cfg: RunConfig, state_file: Optional[str] = None) -> ReportBundle:
    """Observables of the ground state, or of a dumped state over the configured basis."""
    sc = cfg.unit_scale
    if state_file:
        geo = geometry(cfg)
        _, basis = hamiltonian_factory(cfg, geo)
        amps = read_state(state_file)
        if len(amps) != basis.dim:
            raise ConfigError(f"state has dimension {len(amps)}, configured basis has {basis.dim}")
        psi = StateVector(amps, basis)
        meta = {"state_file": str(state_file)}
    else:
        geo, r = _ground(cfg)
        psi = r.vectors[0]
        meta = {"e0": float(r.energies[0]) * sc, "gap": r.gap * sc}
    vals = {k: fn(psi) for k, fn in observable_fns(cfg, geo).items()}
    meta.update(observables=vals, basis_dim=psi.basis.dim, basis_tag=psi.basis.tag)
    b = ReportBundle({"observe": (list(vals), [list(vals.values())])}, meta)
    if cfg["output"]["dump_state"]:
        b.extra["ground_state.flx"] = state_bytes(psi.amplitudes)
    return b


def fidelity_params(cfg: RunConfig) -> FidelityParams:
    r = cfg["readout"]
    return FidelityParams(r["gamma"], r["chi"], r["kappa"], r["eta_a"], r["eta_p"], r["n"], r["epsilon"])


def job_readout_fidelity(cfg: RunConfig) -> ReportBundle:
    fp = fidelity_params(cfg)
    settings = {"wilson": (2 * math.pi / 3, math.pi / math.sqrt(3)), "thooft": (math.pi / 2, math.pi / 2)}
    rows = []
    for name, (theta, omega) in settings.items():
        rows.append([name, theta, omega, fidelity_gp(fp, theta, omega), fidelity_sp(fp, theta),
                     mean_gate_time(fp, theta), per_spin_penalty(fp, theta),
                     inhomogeneity_error(theta, fp.n, fp.epsilon)["exact_bound"]])
    header = ["setting", "theta", "omega", "f_gp", "f_sp", "mean_gate_time", "per_spin_penalty",
              "inhomogeneity_error"]
    return ReportBundle({"fidelity": (header, rows)}, {"n": fp.n})


def job_protocol_sim(cfg: RunConfig) -> ReportBundle:
    geo, r = _ground(cfg)
    psi = r.vectors[0]
    string, loop = paths(cfg, geo)
    tr = []
    w = wilson_protocol(psi, loop, tr)
    method = cfg["readout"]["method"]
    varphi = cfg["readout"]["varphi"]
    w_dir = expect_wilson(psi, loop)
    header = ["quantity", "protocol_re", "protocol_im", "direct_re", "direct_im"]
    rows = [["wilson", w.re, w.im, w_dir.real, w_dir.imag]]
    if string is not None:
        t = thooft_protocol(psi, string, varphi, method, transcript=tr)
        t_dir = expect_thooft(psi, string, varphi)
        rows.append(["thooft", t.re, t.im, t_dir.real, t_dir.imag])
    return ReportBundle({"protocol": (header, rows)}, {"method": method, "varphi": varphi},
                        extra={"transcript.json": transcript_json(tr)})


def job_dump_geometry(cfg: RunConfig) -> ReportBundle:
    geo = geometry(cfg)
    string, loop = paths(cfg, geo)
    d = geo.to_dict()
    d["thooft_path"] = None if string is None else [[l, s] for l, s in string.steps]
    d["wilson_path"] = [[l, s] for l, s in loop.steps]
    header = ["link", "tail", "head", "direction"]
    rows = [[i, l.tail, l.head, l.direction] for i, l in enumerate(geo.links)]
    return ReportBundle({"links": (header, rows)}, {"geometry": d})


JOBS = {
    "device-spectrum": job_device_spectrum,
    "couplings": job_couplings,
    "sweep": job_sweep,
    "observe": job_observe,
    "readout-fidelity": job_readout_fidelity,
    "protocol-sim": job_protocol_sim,
    "dump-geometry": job_dump_geometry,
}

HELP = {
    "device-spectrum": "lowest levels and qutrit data of the link and ancilla circuits",
    "couplings": "effective Delta, U, V, J and gauge couplings of the network",
    "sweep": "ground state, gap and observables over a control grid",
    "observe": "observables of the ground state or of a dumped state",
    "readout-fidelity": "fidelity bounds of the cavity readout methods",
    "protocol-sim": "simulated ancilla/cavity measurements against direct expectations",
    "dump-geometry": "links, plaquettes, string and loop of the configured lattice",
}


def run(cfg: RunConfig, command: str = "sweep", parallel: bool = False,
        state_file: Optional[str] = None) -> ReportBundle:
    t0 = time.perf_counter()
    job = JOBS[command]
    if command == "sweep":
        b = job(cfg, parallel)
    elif command == "observe":
        b = job(cfg, state_file)
    else:
        b = job(cfg)
    b.meta = {"version": __version__, "command": command, "config": emit(cfg),
              "config_hash": config_hash(emit(cfg)), "seconds": round(time.perf_counter() - t0, 3),
              **b.meta}
    return b


def _apply_flags(cfg: RunConfig, args) -> RunConfig:
    sec = {s: dict(v) for s, v in cfg.sections.items()}
    if args.unsigned_gauss:
        sec["run"]["gauss"] = "unsigned"
    if args.string_convention:
        sec["run"]["string_convention"] = args.string_convention
    if args.units:
        sec["run"]["units"] = parse_units(args.units)
    if args.out:
        sec["output"]["dir"] = args.out
    return parse_config(emit(RunConfig(sec)))


def _module_of(exc: BaseException) -> str:
    for fr in reversed(traceback.extract_tb(exc.__traceback__)):
        p = Path(fr.filename)
        if p.parent.name == "fluxqlm":
            return p.stem
    return "cli"


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fluxqlm", description="Fluxonium quantum link model toolkit")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in JOBS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="INI run configuration (default: strong_coupling preset)")
        p.add_argument("--out", help="output directory (overrides [output] dir)")
        p.add_argument("--parallel", action="store_true", help="thread-parallel sweep, re-sorted by control")
        p.add_argument("--unsigned-gauss", action="store_true", help="use the unsigned Gauss convention")
        p.add_argument("--string-convention", choices=("uniform", "alternating"))
        p.add_argument("--units", help="eaj or ghz:<E^a_J in GHz>")
        if name == "observe":
            p.add_argument("--state", help="FLX1 state dump to evaluate instead of solving")
    return ap


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(Path(args.config).read_text(encoding="utf-8")) if args.config else default_config()
        cfg = _apply_flags(cfg, args)
        bundle = run(cfg, args.command, args.parallel, getattr(args, "state", None))
        files = bundle.write(Path(cfg["output"]["dir"]))
    except (FluxQLMError, ValueError, OSError) as exc:
        print(f"error [{_module_of(exc)}]: {exc}", file=sys.stderr)
        return 2
    for f in files:
        print(f)
    if "plot_notice" in bundle.meta:
        print(bundle.meta["plot_notice"], file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
