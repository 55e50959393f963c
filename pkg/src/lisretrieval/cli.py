"""
Command-line driver: ``init``, ``simulate``, ``retrieve``, ``compare``, ``report``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O error.
Wall-clock quantities are written only to ``timing*`` files; every other
output is reproducible from the config and seed.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import TEMPLATE, ExperimentConfig, load_config
from .errors import ConfigError, NumericalError
from .experiment import MethodResult, build_reference, rank_sweep, run_method
from .forward import BeerLambertModel, write_cross_sections
from .gaussian import InverseProblem, build_empirical_prior, read_ensemble, write_ensemble, write_prior
from .mcmc import write_chain
from .prior_reduction import build_prior_basis, write_basis
from .synthetic import SyntheticConfig, build_synthetic_problem, default_noise, default_prior, make_grid, synth_setup, synthetic_ensemble

logger = logging.getLogger("lisretrieval")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def write_kv(path, items) -> None:
    with open(path, "w") as fh:
        for key, value in items:
            fh.write(f"{key} = {value}\n")


def read_kv(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line and not line.lstrip().startswith("#"):
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _fmt(v: float) -> str:
    return f"{v:.10g}"


def _prior(cfg: ExperimentConfig, grid):
    if cfg.ensemble is None:
        return default_prior(grid, cfg.synthetic)
    profiles, _ = read_ensemble(cfg.ensemble)
    if profiles.shape[1] != grid.layer_count:
        raise ConfigError(
            f"ensemble profiles have {profiles.shape[1]} layers, grid has {grid.layer_count}")
    return build_empirical_prior(profiles, cfg.synthetic.jitter)


def _problem(cfg: ExperimentConfig) -> InverseProblem:
    setup, grid = synth_setup(cfg.synthetic)
    prior = _prior(cfg, grid)
    spectrum = cfg.spectrum or cfg.out / "simulate" / "noisy_spectrum.csv"
    data = np.loadtxt(spectrum, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != setup.wavelengths.size or not np.allclose(data[:, 0], setup.wavelengths):
        raise ConfigError(f"spectrum {spectrum} does not match the configured wavelength grid")
    bad = np.flatnonzero(~np.isfinite(data[:, 1]))
    if bad.size:
        raise NumericalError(f"spectrum {spectrum} has a non-finite intensity at row {bad[0]}",
                             index=int(bad[0]))
    return InverseProblem(BeerLambertModel(setup, grid), prior, default_noise(setup, cfg.synthetic),
                          data[:, 1])


def _write_spectrum(path, wavelengths, values):
    np.savetxt(path, np.column_stack([wavelengths, values]), delimiter=",",
               header="wavelength,intensity", comments="", fmt="%.17g")


def cmd_init(cfg_path: Path, out: Path | None) -> None:
    if cfg_path.exists():
        raise ConfigError(f"{cfg_path} exists; refusing to overwrite")
    cfg_path.write_text(TEMPLATE)
    target = (out or cfg_path.parent) / "ensemble.txt"
    grid = make_grid(SyntheticConfig())
    write_ensemble(target, synthetic_ensemble(grid), grid.midpoints)
    print(f"wrote {cfg_path} and {target}")


def cmd_simulate(cfg: ExperimentConfig) -> Path:
    out = cfg.out / "simulate"
    out.mkdir(parents=True, exist_ok=True)
    setup, grid = synth_setup(cfg.synthetic)
    prior = _prior(cfg, grid)
    sp = build_synthetic_problem(cfg.synthetic, seed=cfg.seed, prior=prior, noise_free=cfg.noise_free)

    z = grid.midpoints
    np.savetxt(out / "true_profile.csv", np.column_stack([np.arange(z.size), z, sp.truth]),
               delimiter=",", header="layer,altitude_km,density", comments="",
               fmt=["%d", "%.17g", "%.17g"])
    _write_spectrum(out / "noiseless_spectrum.csv", setup.wavelengths, sp.noiseless)
    _write_spectrum(out / "noisy_spectrum.csv", setup.wavelengths, sp.problem.data)
    write_cross_sections(out / "cross_sections.csv", setup)

    # prior figure data: profile band, covariance, leading singular values
    sd = np.sqrt(np.diag(prior.covariance))
    np.savetxt(out / "fig1_prior_profile.csv",
               np.column_stack([np.arange(z.size), z, prior.mean, prior.mean - 1.96 * sd,
                                prior.mean + 1.96 * sd]),
               delimiter=",", header="layer,altitude_km,mean,lower,upper", comments="",
               fmt=["%d"] + ["%.17g"] * 4)
    write_prior(out, prior)
    sv = build_prior_basis(prior, 1).singular_values[:20]
    np.savetxt(out / "fig1_prior_singular_values.csv", np.column_stack([np.arange(1, sv.size + 1), sv]),
               delimiter=",", header="index,singular_value", comments="", fmt=["%d", "%.17g"])

    write_kv(out / "manifest.txt", [
        ("command", "simulate"),
        ("config_sha256", cfg.digest()),
        ("setup_seed", cfg.synthetic.seed),
        ("truth_noise_seed", cfg.seed),
        ("noise_free", cfg.noise_free),
        ("n_layers", grid.layer_count),
        ("n_wavelengths", setup.wavelengths.size),
        ("noise_sd", _fmt(float(np.sqrt(sp.problem.noise.covariance[0, 0])))),
    ])
    return out


def _run_dir(cfg: ExperimentConfig) -> Path:
    name = f"retrieve-{cfg.method}"
    if cfg.method != "full":
        name += f"-r{cfg.rank}" if cfg.rank is not None else f"-t{cfg.threshold if cfg.threshold is not None else 1.0:g}"
    return cfg.out / name


def _write_diagnostics(out: Path, res: MethodResult, extra) -> None:
    with open(out / "diagnostics.txt", "w") as fh:
        for k, v in [
            ("method", res.method),
            ("rank", res.rank if res.rank is not None else "none"),
            ("chain_length", res.chain.length),
            ("burn_in", res.chain.burn_in),
            ("dimension", res.chain.dimension),
            ("acceptance_rate", _fmt(res.chain.acceptance_rate)),
            ("rejected_nan", res.chain.nan_count),
            ("frozen_adaptations", res.chain.frozen_adaptations),
            ("n_eff_min", _fmt(res.ess.min_n_eff)),
            *extra,
        ]:
            fh.write(f"{k} = {v}\n")
        fh.write("\n# coordinate,n_eff\n")
        for i, v in enumerate(res.ess.n_eff):
            fh.write(f"{i},{_fmt(v)}\n")


def _write_timing(out: Path, res: MethodResult) -> None:
    with open(out / "timing.txt", "w") as fh:
        fh.write(f"chain_wall_time_seconds = {res.chain.wall_time_seconds:.6f}\n")
        fh.write(f"wall_time_seconds = {res.wall_time:.6f}\n")
        fh.write(f"sample_speed_min = {res.sample_speed:.6f}\n")
        fh.write("\n# coordinate,sample_speed\n")
        for i, v in enumerate(res.ess.speeds):
            fh.write(f"{i},{v:.6f}\n")


def cmd_retrieve(cfg: ExperimentConfig) -> Path:
    problem = _problem(cfg)
    out = _run_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    ref = build_reference(problem, cfg.laplace_samples, seed=cfg.seed)
    warnings = []
    if not ref.laplace.converged:
        warnings.append("map_not_converged")
    rank = cfg.rank if cfg.method != "full" else None
    threshold = cfg.threshold if cfg.method == "lis" else None
    res = run_method(problem, cfg.method, ref, cfg.sampler(), rank=rank, threshold=threshold)

    thin = cfg.export_thin
    n = problem.state_dim
    write_chain(out / "chain_full.csv", res.lifted[::thin], [f"x{i}" for i in range(n)])
    if res.method != "full":
        label = "xr" if res.method == "lis" else "alpha"
        write_chain(out / "chain_reduced.csv", res.chain.kept[::thin],
                    [f"{label}{i + 1}" for i in range(res.chain.dimension)])

    prior = problem.prior
    z = problem.forward.grid.midpoints
    post = dg.envelope(res.lifted)
    sd = np.sqrt(np.diag(prior.covariance))
    np.savetxt(out / "envelope.csv",
               np.column_stack([np.arange(n), z, post, prior.mean, prior.mean - 1.96 * sd,
                                prior.mean + 1.96 * sd]),
               delimiter=",", comments="",
               header="layer,altitude_km,mean,lower,upper,prior_mean,prior_lower,prior_upper",
               fmt=["%d"] + ["%.17g"] * 7)
    np.savetxt(out / "map.csv", np.column_stack([np.arange(n), ref.laplace.map_point]),
               delimiter=",", header="layer,map", comments="", fmt=["%d", "%.17g"])

    if res.method == "lis":
        write_basis(out / "basis.csv", res.basis.V_r, "v")
        sv = res.basis.singular_values
    elif res.method == "prired":
        write_basis(out / "basis.csv", res.basis.basis, "p")
        sv = res.basis.singular_values
    else:
        sv = np.linalg.svd(ref.j_hat, compute_uv=False)
    np.savetxt(out / "singular_values.csv", np.column_stack([np.arange(1, sv.size + 1), sv]),
               delimiter=",", header="index,singular_value", comments="", fmt=["%d", "%.17g"])

    _write_diagnostics(out, res, [
        ("map_converged", ref.laplace.converged),
        ("map_iterations", ref.laplace.iterations),
    ])
    _write_timing(out, res)
    write_kv(out / "manifest.txt", [
        ("command", "retrieve"),
        ("config_sha256", cfg.digest()),
        ("method", res.method),
        ("rank", res.rank if res.rank is not None else "none"),
        ("sampler_seed", cfg.seed),
        ("laplace_seed", cfg.seed),
        ("laplace_samples", cfg.laplace_samples),
        ("export_thin", thin),
        ("warnings", ",".join(warnings) or "none"),
        ("timing_file", "timing.txt"),
    ])
    return out


def cmd_compare(cfg: ExperimentConfig) -> Path:
    ref_dir = cfg.reference or cfg.out / "retrieve-full"
    chain_path = ref_dir / "chain_full.csv"
    if not chain_path.exists():
        raise FileNotFoundError(f"reference full-space run not found: {chain_path}")
    reference = np.loadtxt(chain_path, delimiter=",", skiprows=1, ndmin=2)
    problem = _problem(cfg)
    if reference.shape[1] != problem.state_dim:
        raise ConfigError("reference chain dimension does not match the problem")
    out = cfg.out / "compare"
    out.mkdir(parents=True, exist_ok=True)

    ref = build_reference(problem, cfg.laplace_samples, seed=cfg.seed)
    rows, results = rank_sweep(problem, ref, reference, cfg.sampler(), cfg.ranks,
                               cfg.compare_methods, cfg.bins)

    with open(out / "fig3_hellinger.csv", "w") as fh:
        fh.write("rank,method,hellinger\n")
        for r in rows:
            fh.write(f"{r.rank},{r.method},{_fmt(r.hellinger)}\n")
    with open(out / "timing.csv", "w") as fh:
        fh.write("rank,method,wall_time_seconds,n_eff_min,sample_speed\n")
        for r in rows:
            fh.write(f"{r.rank},{r.method},{r.wall_time:.6f},{_fmt(r.n_eff_min)},{r.sample_speed:.6f}\n")
    with open(out / "hellinger_per_coordinate.csv", "w") as fh:
        n = problem.state_dim
        fh.write("rank,method," + ",".join(f"x{i}" for i in range(n)) + "\n")
        for (method, r), res in results.items():
            per = dg.marginal_hellinger(reference, res.lifted, cfg.bins)
            fh.write(f"{r},{method}," + ",".join(_fmt(v) for v in per) + "\n")

    k = min(4, problem.state_dim)
    write_basis(out / "fig3_prired_basis.csv", build_prior_basis(problem.prior, k).vectors[:, :k], "u")
    from .lis import build_lis
    write_basis(out / "fig3_lis_basis.csv", build_lis(ref.j_hat, problem.prior, rank=k).V_r, "v")

    ref_timing = ref_dir / "timing.txt"
    if ref_timing.exists():
        write_kv(out / "timing_reference.txt", read_kv(ref_timing).items())
    write_kv(out / "manifest.txt", [
        ("command", "compare"),
        ("config_sha256", cfg.digest()),
        ("reference", ref_dir),
        ("ranks", ",".join(str(r) for r in cfg.ranks)),
        ("methods", ",".join(cfg.compare_methods)),
        ("sampler_seed", cfg.seed),
        ("split_half_noise_floor", _fmt(dg.split_half_hellinger(reference, cfg.bins))),
        ("timing_file", "timing.csv"),
    ])
    return out


def cmd_report(cfg: ExperimentConfig) -> None:
    root = cfg.out
    if not root.exists():
        raise FileNotFoundError(f"output directory not found: {root}")
    found = False
    for run in sorted(root.glob("retrieve-*")):
        found = True
        diag = read_kv(run / "diagnostics.txt") if (run / "diagnostics.txt").exists() else {}
        timing = read_kv(run / "timing.txt") if (run / "timing.txt").exists() else {}
        print(f"{run.name}: acceptance={diag.get('acceptance_rate', '?')} "
              f"n_eff_min={diag.get('n_eff_min', '?')} "
              f"speed={timing.get('sample_speed_min', '?')}/s")
    table = root / "compare" / "fig3_hellinger.csv"
    if table.exists():
        found = True
        print(table.read_text().rstrip())
        timing = root / "compare" / "timing.csv"
        if timing.exists():
            print(timing.read_text().rstrip())
    if not found:
        print(f"no retrieval outputs under {root}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lisretrieval", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("init", "simulate", "retrieve", "compare", "report"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=Path("retrieval.ini"))
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path)
        if name in ("retrieve", "compare"):
            p.add_argument("--method", choices=("full", "lis", "prired"))
            p.add_argument("--rank", type=int)
            p.add_argument("--threshold", type=float)
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out = args.out
    if getattr(args, "method", None):
        cfg.method = args.method
    if getattr(args, "rank", None) is not None:
        cfg.rank, cfg.threshold = args.rank, None
    if getattr(args, "threshold", None) is not None:
        cfg.threshold, cfg.rank = args.threshold, None
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "init":
            cmd_init(args.config, args.out)
            return EXIT_OK
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "simulate":
            print(cmd_simulate(cfg))
        elif args.command == "retrieve":
            print(cmd_retrieve(cfg))
        elif args.command == "compare":
            print(cmd_compare(cfg))
        else:
            cmd_report(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
