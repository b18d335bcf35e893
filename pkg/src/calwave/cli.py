"""Command-line interface: classification, synthesis, orbit and measure
analysis, transform round-trips, and plot-ready report export."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import calderon, measure, orbits, plots, sl2z, transform
from .config import JobConfig, example_config
from .groups import GroupModel, builtin_group
from .spectral import (
    SpectralFunction,
    export_csv,
    load_spectral,
    mask_catalog,
    save_spectral,
)

EXIT_CONFIG = 1
EXIT_INCONCLUSIVE = 2
EXIT_NO_ADMISSIBLE = 3
EXIT_NOT_WEAKLY = 4


def _load_config(config_path, group, tol, resolution, truncation):
    if config_path:
        cfg = JobConfig.from_file(config_path)
    else:
        cfg = JobConfig.from_dict(example_config(group or "dilation1d_pos"))
    raw = cfg.raw
    if group:
        raw["group"] = {"name": group, "params": {}}
        if not config_path:
            raw.update({k: v for k, v in example_config(group).items()
                        if k in ("grid", "quadrature")})
    if tol is not None:
        raw["tolerances"]["admissible"] = tol
    if resolution:
        raw["quadrature"]["resolution"] = [int(r) for r in resolution.split(",")]
    if truncation:
        vals = [float(v) for v in truncation.split(",")]
        raw["quadrature"]["truncation"] = [
            [vals[i], vals[i + 1]] for i in range(0, len(vals), 2)
        ]
    return JobConfig.from_dict(raw)


def _default_seed(cfg: JobConfig, grid=None) -> SpectralFunction:
    """Radial Gaussian shell adapted to the mask; every catalog orbit
    crosses the shell, so the Calderon integral stays positive."""
    center = float(cfg.option("seed_center", 2.0))
    width = float(cfg.option("seed_width", 0.8))
    mask = cfg.mask()
    g = cfg.group()
    grid = grid or cfg.grid()
    if isinstance(g, GroupModel) and all(ax.kind != "line" for ax in g.axes):
        # compact dilation group: orbits never leave their radius, so the
        # Calderon integral inherits the seed's decay; a slowly decaying
        # profile keeps it above the floor across the whole grid
        def fn(pts):
            r = np.linalg.norm(np.atleast_2d(pts), axis=1)
            return 1.0 / np.sqrt(1.0 + r ** 2)

        return SpectralFunction.from_callable(grid, fn, mask)
    if mask.name == "annulus":
        center = 0.5 * (mask.params["r1"] + mask.params["r2"])
        width = max(width, 0.6 * (mask.params["r2"] - mask.params["r1"]))

    def fn(pts):
        r = np.linalg.norm(np.atleast_2d(pts), axis=1)
        return np.exp(-(((r - center) / width) ** 2))

    return SpectralFunction.from_callable(grid, fn, mask)


def _seed(cfg: JobConfig, seed_psi) -> SpectralFunction:
    if seed_psi:
        return load_spectral(seed_psi)
    return _default_seed(cfg)


def _write_json(out: Path, name: str, payload: dict, cfg: JobConfig) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    with open(path, "w") as fh:
        json.dump({"config": cfg.to_json(), **payload}, fh, indent=2)
    return path


def _fail(message: str, code: int = EXIT_CONFIG):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


common_options = [
    click.option("--config", "config_path", envvar="CALWAV_CONFIG",
                 type=click.Path(exists=True), help="Job config JSON."),
    click.option("--group", default=None, help="Builtin group name override."),
    click.option("--out", "out_dir", default="calwave_out", show_default=True,
                 type=click.Path(), help="Output directory."),
    click.option("--tol", type=float, default=None,
                 help="Admissibility tolerance override."),
    click.option("--resolution", default=None,
                 help="Quadrature resolution override, e.g. '64,32'."),
    click.option("--truncation", default=None,
                 help="Per-axis chart box override, e.g. '-4,4,-4,4'."),
    click.option("--seed-psi", "seed_psi", type=click.Path(exists=True),
                 default=None, help="Input spectral file for psi-hat."),
]


def with_common(f):
    for opt in reversed(common_options):
        f = opt(f)
    return f


@click.group()
def main():
    """Generalized continuous wavelet transforms from matrix dilation groups."""


@main.command("group-info")
@with_common
def cmd_group_info(config_path, group, out_dir, tol, resolution, truncation,
                   seed_psi):
    """Haar data, modular functions and unimodularity of a builtin group."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g = cfg.group()
        out = Path(out_dir)
        if not isinstance(g, GroupModel):  # discrete sl2z model
            payload = {
                "group": g.name,
                "discrete": True,
                "haar": "counting measure",
                "entry_bound": g.entry_bound,
            }
        else:
            rng = np.random.default_rng(0)
            coords = rng.uniform(-1.0, 1.0, size=(64, g.k))
            for i, ax in enumerate(g.axes):
                if ax.kind == "discrete":
                    coords[:, i] = rng.choice(ax.values, size=64)
            a, b = g.chart(coords[:32]), g.chart(coords[32:])
            prod = a @ b
            hom_dh = np.max(np.abs(
                g.modular_H(prod) - g.modular_H(a) * g.modular_H(b)
            ))
            hom_delta = np.max(np.abs(
                g.dilation_modulus(prod)
                - g.dilation_modulus(a) * g.dilation_modulus(b)
            ))
            payload = {
                "group": g.name,
                "d": g.d,
                "chart_dim": g.k,
                "unimodular_G": g.is_unimodular_G(),
                "modular_H_homomorphism_error": float(hom_dh),
                "dilation_modulus_homomorphism_error": float(hom_delta),
                "modular_H_at_identity": float(g.modular_H(g.identity.matrix)),
                "delta_at_identity": float(
                    g.dilation_modulus(g.identity.matrix)
                ),
            }
        path = _write_json(out, "group_info.json", payload, cfg)
        click.echo(json.dumps(payload, indent=2))
        click.echo(f"wrote {path}")
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))


@main.command("classify")
@with_common
def cmd_classify(config_path, group, out_dir, tol, resolution, truncation,
                 seed_psi):
    """Calderon admissibility verdict for psi-hat on the configured band."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g, mask = cfg.group(), cfg.mask()
        q = cfg.quadrature(g)
        psi_hat = _seed(cfg, seed_psi)
        report = calderon.classify(
            g, psi_hat, mask, q,
            grid_sample_count=int(cfg.option("sample_count", 2000)),
            tol=cfg.tolerance("admissible"),
        )
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    path = _write_json(out, "calderon_report.json", report.to_json(), cfg)
    with open(out / "phi_samples.csv", "w") as fh:
        cols = ",".join(f"xi{i+1}" for i in range(report.points.shape[1]))
        fh.write(f"{cols},phi\n")
        for p, v in zip(report.points, report.phi):
            fh.write(",".join(f"{x:.12g}" for x in p) + f",{v:.12g}\n")
    plots.save_phi_plot(out / "phi_samples.png", report.points, report.phi,
                        f"{g.name}: verdict {report.verdict}")
    click.echo(f"verdict: {report.verdict} "
               f"(max |Phi-1| = {report.max_deviation:.3e}, "
               f"leakage = {report.leakage:.3e})")
    click.echo(f"wrote {path}")
    if report.verdict == "inconclusive":
        sys.exit(EXIT_INCONCLUSIVE)


@main.command("synthesize")
@with_common
def cmd_synthesize(config_path, group, out_dir, tol, resolution, truncation,
                   seed_psi):
    """Construct an admissible vector on the configured band."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g, mask, grid = cfg.group(), cfg.mask(), cfg.grid()
        q = cfg.quadrature(g)
        seed = _seed(cfg, seed_psi)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    try:
        phi = calderon.normalize_to_admissible(g, seed, mask, q)
    except ValueError as exc:
        _fail(str(exc), EXIT_NOT_WEAKLY)
    if g.is_unimodular_G():
        def rebuild(scale):
            big = type(grid).from_extent(
                [int(n * scale) for n in grid.shape],
                [
                    [o * scale, (o + n * s) * scale]
                    for o, n, s in zip(grid.origin, grid.shape, grid.spacing)
                ],
            )
            if seed_psi:
                seed2 = SpectralFunction.from_callable(
                    big, lambda pts: _resample(seed, pts), mask
                )
            else:
                seed2 = _default_seed(cfg, big)
            return calderon.normalize_to_admissible(g, seed2, mask, q)

        try:
            transversal = orbits.builtin_transversal(g, mask)
        except ValueError:
            transversal = None
        mass = measure.orbit_space_mass(g, mask, transversal, phi, q,
                                        rebuild=rebuild)
        if not mass.finite:
            _write_json(out, "synthesis_report.json",
                        {"orbit_space_mass": mass.to_json()}, cfg)
            _fail("no admissible vector: unimodular with infinite "
                  "orbit-space measure", EXIT_NO_ADMISSIBLE)
        result_payload = {"branch": "unimodular",
                          "orbit_space_mass": mass.to_json()}
        output = phi
    else:
        bands = [
            mask_catalog(b["name"], b.get("params", {}),
                         b.get("null_guard") or mask.null_guard)
            for b in cfg.option("bands", [])
        ] or [mask]
        try:
            synth = calderon.synthesize_nonunimodular(g, phi, bands, q)
        except ValueError as exc:
            _fail(str(exc))
        result_payload = {"branch": "nonunimodular", "series": synth.to_json()}
        output = synth.nu
    report = calderon.classify(g, output, output.mask, q,
                               tol=cfg.tolerance("admissible"))
    result_payload["classification"] = report.to_json()
    out.mkdir(parents=True, exist_ok=True)
    save_spectral(out / "admissible_vector.cwsf", output, kind="psi_hat")
    if grid.d <= 2:
        export_csv(out / "admissible_vector.csv", output)
    plots.save_field_plot(out / "admissible_vector.png", output,
                          f"{g.name}: synthesized vector")
    path = _write_json(out, "synthesis_report.json", result_payload, cfg)
    click.echo(f"verdict on output: {report.verdict}")
    click.echo(f"wrote {path}")
    if report.verdict == "inconclusive":
        sys.exit(EXIT_INCONCLUSIVE)


def _resample(f: SpectralFunction, pts: np.ndarray) -> np.ndarray:
    from .spectral import evaluate_offgrid

    return evaluate_offgrid(f, pts)


@main.command("orbits")
@with_common
def cmd_orbits(config_path, group, out_dir, tol, resolution, truncation,
               seed_psi):
    """Stabilizer probes and transversal coordinates for sampled points."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g, mask, grid = cfg.group(), cfg.mask(), cfg.grid()
        q = cfg.quadrature(g)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        transversal = orbits.builtin_transversal(g, mask)
        transversal_error = None
    except ValueError as exc:
        transversal, transversal_error = None, str(exc)
    rng = np.random.default_rng(int(cfg.option("seed", 0)))
    pts = grid.points()
    masked = pts[mask(pts)]
    n = min(int(cfg.option("orbit_samples", 12)), len(masked))
    take = rng.choice(len(masked), size=n, replace=False)
    reports, clouds = [], []
    node_take = rng.choice(len(q), size=min(200, len(q)), replace=False)
    for xi in masked[take]:
        reports.append(orbits.analyze_orbit(g, xi, transversal=transversal))
        clouds.append(np.einsum("mij,i->mj", q.matrices[node_take], xi))
    with open(out / "orbit_clouds.csv", "w") as fh:
        cols = ",".join(f"xi{i+1}" for i in range(g.d))
        fh.write(f"orbit,{cols}\n")
        for k, cloud in enumerate(clouds):
            for row in np.atleast_2d(cloud):
                fh.write(f"{k}," + ",".join(f"{x:.10g}" for x in row) + "\n")
    plots.save_orbit_cloud(out / "orbit_clouds.png", clouds,
                           f"{g.name}: sampled dual orbits")
    payload = {
        "transversal": None if transversal is None else transversal.name,
        "transversal_error": transversal_error,
        "orbits": [r.to_json() for r in reports],
    }
    path = _write_json(out, "orbit_reports.json", payload, cfg)
    click.echo(f"wrote {path}")


@main.command("disintegrate")
@with_common
def cmd_disintegrate(config_path, group, out_dir, tol, resolution, truncation,
                     seed_psi):
    """Pseudo-image, kappa constants and the disintegration identity."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g, mask, grid = cfg.group(), cfg.mask(), cfg.grid()
        q = cfg.quadrature(g)
        transversal = orbits.builtin_transversal(g, mask)
        phi = _seed(cfg, seed_psi)
        disint = measure.build_disintegration(g, phi, mask, transversal, q)
        f = SpectralFunction.from_callable(
            grid,
            lambda pts: np.exp(-np.sum(np.atleast_2d(pts) ** 2, axis=1) / 4.0),
            mask,
        )
        check = measure.verify_disintegration(g, disint, f, q)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = disint.to_json()
    payload["identity_check"] = check
    path = _write_json(out, "disintegration.json", payload, cfg)
    ow = disint.orbit_weight
    keys = sorted(ow.weights)
    centers = np.array([ow.center_of(k) for k in keys])
    weights = np.array([ow.weights[k] for k in keys])
    with open(out / "orbit_weights.csv", "w") as fh:
        cols = ",".join(f"c{i+1}" for i in range(centers.shape[1])) or "bin"
        fh.write(f"{cols},weight\n")
        for k, (c, w) in enumerate(zip(centers, weights)):
            coord = ",".join(f"{x:.10g}" for x in np.atleast_1d(c)) or str(k)
            fh.write(f"{coord},{w:.12g}\n")
    plots.save_bins_plot(out / "orbit_weights.png", centers, weights,
                         f"{g.name}: pseudo-image on the orbit space")
    click.echo(f"identity rel_err = {check['rel_err']:.3e}")
    click.echo(f"wrote {path}")


@main.command("roundtrip")
@with_common
def cmd_roundtrip(config_path, group, out_dir, tol, resolution, truncation,
                  seed_psi):
    """Analyze-then-synthesize a band-limited signal; report the L2 error."""
    try:
        cfg = _load_config(config_path, group, tol, resolution, truncation)
        g, mask, freq = cfg.group(), cfg.mask(), cfg.grid()
        q = cfg.quadrature(g)
        # spatial grid whose dual reproduces the configured frequency grid
        spacing = tuple(1.0 / (n * s) for n, s in zip(freq.shape, freq.spacing))
        spatial = type(freq)(
            shape=freq.shape,
            spacing=spacing,
            origin=tuple(-(n // 2) * s for n, s in zip(freq.shape, spacing)),
        )
        freq = transform.frequency_grid_of(spatial)
        cfg.raw["grid"] = {
            "shape": list(freq.shape),
            "extent": [[o, o + n * s] for o, n, s in
                       zip(freq.origin, freq.shape, freq.spacing)],
        }
        seed = _seed(cfg, seed_psi)
        if not seed.grid.close_to(freq):
            raise ValueError("grid mismatch: seed must live on the dual grid")
        psi_hat = calderon.normalize_to_admissible(g, seed, seed.mask, q)
        fhat = SpectralFunction.from_callable(
            freq,
            lambda pts: np.exp(
                -((np.linalg.norm(np.atleast_2d(pts), axis=1) - 1.5) ** 2)
            ),
            seed.mask,
        )
        f = transform.freq_to_space(
            SpectralFunction(grid=freq, values=fhat.values,
                             mask=transform.allpass_mask()),
            spatial,
        )
        result = transform.roundtrip(g, f, psi_hat, q)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {k: v for k, v in result.items() if k != "f_rec"}
    path = _write_json(out, "roundtrip_metrics.json", payload, cfg)
    plots.save_signal_comparison(
        out / "roundtrip.png", f.grid.axes(), f.values,
        result["f_rec"].values, f"{g.name}: round-trip reconstruction",
    )
    click.echo(f"relative L2 error = {result['rel_l2_error']:.3e}")
    click.echo(f"wrote {path}")


@main.command("sl2z-demo")
@with_common
def cmd_sl2z_demo(config_path, group, out_dir, tol, resolution, truncation,
                  seed_psi):
    """Divergence witness: partial Calderon sums over SL(2,Z) grow without
    bound, so the discrete dilation group admits no weakly admissible
    vector."""
    try:
        cfg = _load_config(config_path, group or "sl2z_demo", tol, resolution,
                           truncation)
        entry_bound = int(cfg.option("entry_bound", 128))
        n_points = int(cfg.option("sample_count", 100))
        word_lengths = np.asarray(
            cfg.option("word_lengths", [5, 10, 20, 30, 40, 50]), dtype=int
        )
        rng = np.random.default_rng(int(cfg.option("seed", 0)))
        r = rng.uniform(0.5, 1.0, size=n_points)
        theta = rng.uniform(0, 2 * np.pi, size=n_points)
        xis = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
        sums = sl2z.partial_sums(
            lambda pts: np.exp(-np.sum(np.atleast_2d(pts) ** 2, axis=1)),
            xis, word_lengths, entry_bound=entry_bound,
        )
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _fail(str(exc))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sl2z_partial_sums.csv", "w") as fh:
        fh.write("word_length," + ",".join(
            f"xi_{i}" for i in range(n_points)) + "\n")
        for nlen, row in zip(word_lengths, sums):
            fh.write(f"{nlen}," + ",".join(f"{v:.10g}" for v in row) + "\n")
    base = sums[list(word_lengths).index(5)] if 5 in word_lengths else sums[0]
    growth = sums[-1] / np.maximum(base, 1e-300)
    payload = {
        "entry_bound": entry_bound,
        "word_lengths": word_lengths.tolist(),
        "fraction_10x_growth": float(np.mean(growth >= 10.0)),
        "median_growth": float(np.median(growth)),
        "monotone": bool(np.all(np.diff(sums, axis=0) >= -1e-12)),
    }
    path = _write_json(out, "sl2z_summary.json", payload, cfg)
    plots.save_partial_sums_plot(out / "sl2z_partial_sums.png",
                                 word_lengths, sums,
                                 "SL(2,Z) partial Calderon sums")
    click.echo(json.dumps(payload, indent=2))
    click.echo(f"wrote {path}")


if __name__ == "__main__":
    main()
