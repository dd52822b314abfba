"""Command-line interface: simulate | krige | loocv | cluster | study.

Every command is deterministic given (flags, seed) and writes CSV tables plus
SVG figures (with a companion CSV per figure) under ``--out``.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from spafda.clustering import (
    Partition,
    amplitude_dissimilarity_matrix,
    hierarchical_cluster,
    l2_dissimilarity_matrix,
    phase_dissimilarity_matrix,
    rand_index,
)
from spafda.dataio import (
    DatasetFormatError,
    load_dataset,
    save_dataset,
    smooth_dataset,
)
from spafda.kriging import (
    METRIC_NAMES,
    KrigingConfig,
    krige_site,
    loocv_metrics,
    ordinary_krige_functional,
)
from spafda.report import variogram_report
from spafda.simgen import gen_cluster_dataset, gen_kriging_dataset

KRIGING_DESIGNS = ("bspline", "bimodal")
CLUSTER_DESIGNS = ("agree", "disagree")


def _fmt(x: float) -> str:
    return np.format_float_scientific(float(x), unique=True)


def _write_table(path: Path, header: str, rows) -> None:
    lines = [header] + [",".join(str(c) for c in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args) -> KrigingConfig:
    lam_grid = tuple(float(x) for x in args.lambda_grid.split(","))
    return KrigingConfig(
        max_iterations=args.max_iterations,
        tolerance=args.tolerance,
        lambda_grid=lam_grid,
        weight_floor=args.weight_floor,
        seed=args.seed,
        n_bins=args.n_bins,
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--iota", type=float, default=1e-4, help="smoothing penalty weight")
    p.add_argument("--lambda-grid", default="0.1", help="comma-separated alignment penalties")
    p.add_argument("--max-iterations", type=int, default=10)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--weight-floor", type=float, default=1e-6)
    p.add_argument("--n-bins", type=int, default=12)


def _load_prepared(args):
    dataset = load_dataset(args.data)
    if args.iota > 0:
        dataset = smooth_dataset(dataset, args.iota)
    return dataset


# ---------------------------------------------------------------- simulate


def cmd_simulate(args) -> int:
    out = _out_dir(args)
    if args.design in KRIGING_DESIGNS:
        sim = gen_kriging_dataset(
            design=args.design,
            B=args.B,
            sigma_a2=args.sigma_a2,
            noise_sd=args.noise_sd,
            seed=args.seed,
            grid_size=args.grid_size,
        )
    elif args.design in CLUSTER_DESIGNS:
        sim = gen_cluster_dataset(
            design=args.design,
            delta_a=args.delta_a,
            delta_b=args.delta_b,
            B=args.B,
            sigma_a2=args.sigma_a2,
            noise_sd=args.noise_sd,
            seed=args.seed,
            grid_size=args.grid_size,
        )
    else:  # argparse choices guard this
        raise ValueError(f"unknown design: {args.design!r}")

    ds = sim.dataset
    save_dataset(ds, out / "dataset.csv")
    rows = [
        (sid, *(_fmt(v) for v in sim.true_amplitudes[i]))
        for i, sid in enumerate(ds.site_ids)
    ]
    header = "site_id," + ",".join(f"t_{k}" for k in range(ds.grid.size))
    _write_table(out / "true_amplitudes.csv", header, rows)
    rows = [
        (sid, *(_fmt(v) for v in sim.true_phases[i].values))
        for i, sid in enumerate(ds.site_ids)
    ]
    _write_table(out / "true_phases.csv", header, rows)
    if sim.amp_partition is not None:
        _write_table(
            out / "true_partitions.csv",
            "site_id,amplitude_cluster,phase_cluster",
            [
                (sid, int(a), int(p))
                for sid, a, p in zip(ds.site_ids, sim.amp_partition, sim.phase_partition)
            ],
        )
    print(f"wrote {ds.n}-site {args.design} dataset to {out}")
    return 0


# ------------------------------------------------------------------- krige


def cmd_krige(args) -> int:
    if not args.target:
        print("krige: at least one --target X Y is required", file=sys.stderr)
        return 2
    out = _out_dir(args)
    dataset = _load_prepared(args)
    config = _config_from_args(args)
    targets = [(float(x), float(y)) for x, y in args.target]

    rows = []
    entries = []
    for tx, ty in targets:
        res = krige_site(dataset, (tx, ty), config)
        ok_pred, _ = ordinary_krige_functional(dataset, (tx, ty), n_bins=args.n_bins)
        label = f"({tx:g},{ty:g})"
        entries.append((label, None, res.combined.values, ok_pred.values))
        for method, vals in (("apk", res.combined.values), ("ok", ok_pred.values)):
            rows.append((_fmt(tx), _fmt(ty), method, *(_fmt(v) for v in vals)))
    header = "x,y,method," + ",".join(f"t_{k}" for k in range(dataset.grid.size))
    _write_table(out / "predictions.csv", header, rows)

    from spafda.plots import plot_predictions, plot_variograms

    plot_predictions(dataset.grid, entries, out / "predictions_plot")
    panels = variogram_report(dataset, n_bins=args.n_bins)
    plot_variograms(panels, out / "variograms")
    print(f"wrote predictions for {len(targets)} target(s) to {out}")
    return 0


# ------------------------------------------------------------------- loocv


def cmd_loocv(args) -> int:
    out = _out_dir(args)
    dataset = _load_prepared(args)
    config = _config_from_args(args)
    apk = loocv_metrics(dataset, config, method="apk")
    ok = loocv_metrics(dataset, config, method="ok")

    per_cols = [f"{m}_apk" for m in METRIC_NAMES] + [f"{m}_ok" for m in METRIC_NAMES]
    rows = [
        (sid, *(_fmt(v) for v in apk.per_site[i]), *(_fmt(v) for v in ok.per_site[i]))
        for i, sid in enumerate(dataset.site_ids)
    ]
    _write_table(out / "loocv_per_site.csv", "site_id," + ",".join(per_cols), rows)
    am, om = apk.means, ok.means
    _write_table(
        out / "loocv_means.csv",
        ",".join(per_cols),
        [tuple(_fmt(am[m]) for m in METRIC_NAMES) + tuple(_fmt(om[m]) for m in METRIC_NAMES)],
    )

    from spafda.plots import plot_variograms

    panels = variogram_report(dataset, n_bins=args.n_bins)
    plot_variograms(panels, out / "variograms")
    print(f"wrote LOOCV tables for {dataset.n} sites to {out}")
    for m in METRIC_NAMES:
        print(f"  {m}: apk {am[m]:.4g}  ok {om[m]:.4g}")
    return 0


# ----------------------------------------------------------------- cluster


def _load_truth_partitions(path, site_ids):
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    if header != ["site_id", "amplitude_cluster", "phase_cluster"]:
        raise DatasetFormatError(f"{path}: line 1: unexpected partition header")
    amp, ph = {}, {}
    for k, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != 3:
            raise DatasetFormatError(f"{path}: line {k}: expected 3 cells")
        amp[cells[0]] = int(cells[1])
        ph[cells[0]] = int(cells[2])
    missing = [s for s in site_ids if s not in amp]
    if missing:
        raise DatasetFormatError(f"{path}: missing sites {missing[:3]}")
    return (
        Partition.from_labels(site_ids, [amp[s] for s in site_ids]),
        Partition.from_labels(site_ids, [ph[s] for s in site_ids]),
    )


def cmd_cluster(args) -> int:
    out = _out_dir(args)
    dataset = _load_prepared(args)
    amp_d = amplitude_dissimilarity_matrix(dataset, n_bins=args.n_bins)
    ph_d = phase_dissimilarity_matrix(dataset, n_bins=args.n_bins)
    l2_d = l2_dissimilarity_matrix(dataset, n_bins=args.n_bins)
    parts = {
        "amplitude": hierarchical_cluster(amp_d, args.k, args.linkage),
        "phase": hierarchical_cluster(ph_d, args.k, args.linkage),
        "l2": hierarchical_cluster(l2_d, args.k, args.linkage),
    }
    _write_table(
        out / "partitions.csv",
        "site_id,amplitude_cluster,phase_cluster,l2_cluster",
        [
            (sid, parts["amplitude"].labels[i], parts["phase"].labels[i], parts["l2"].labels[i])
            for i, sid in enumerate(dataset.site_ids)
        ],
    )

    from spafda.plots import plot_cluster_map

    for name, part in parts.items():
        plot_cluster_map(
            dataset.sites, part.labels, dataset.site_ids, out / f"map_{name}", title=name
        )

    if args.truth:
        true_amp, true_ph = _load_truth_partitions(args.truth, dataset.site_ids)
        rows = [
            ("amplitude_rand", name, _fmt(rand_index(part, true_amp)))
            for name, part in parts.items()
        ] + [
            ("phase_rand", name, _fmt(rand_index(part, true_ph)))
            for name, part in parts.items()
        ]
        _write_table(out / "rand_indices.csv", "index,method,value", rows)
    print(f"wrote {dataset.n}-row partitions (k={args.k}, {args.linkage}) to {out}")
    return 0


# ------------------------------------------------------------------- study


def _study_kriging(args, out: Path) -> None:
    config = _config_from_args(args)
    cols = [f"{m}_apk" for m in METRIC_NAMES] + [f"{m}_ok" for m in METRIC_NAMES]
    rows = []
    per_rep = []
    for rep in range(args.replicates):
        seed = args.seed + rep
        sim = gen_kriging_dataset(design=args.design, B=args.B, seed=seed)
        ds = smooth_dataset(sim.dataset, args.iota) if args.iota > 0 else sim.dataset
        apk = loocv_metrics(ds, config, method="apk").means
        ok = loocv_metrics(ds, config, method="ok").means
        vals = [apk[m] for m in METRIC_NAMES] + [ok[m] for m in METRIC_NAMES]
        per_rep.append(vals)
        rows.append((seed, *(_fmt(v) for v in vals)))
        print(f"replicate seed={seed}: E3 apk {apk['E3']:.3f} ok {ok['E3']:.3f}", flush=True)
    means = np.mean(per_rep, axis=0)
    rows.append(("mean", *(_fmt(v) for v in means)))
    _write_table(out / "study_kriging.csv", "seed," + ",".join(cols), rows)
    print("means: " + "  ".join(f"{c}={v:.4g}" for c, v in zip(cols, means)))


def _study_cluster(args, out: Path) -> None:
    cols = (
        "amp_rand_apc",
        "amp_rand_l2",
        "phase_rand_apc",
        "phase_rand_l2",
    )
    rows = []
    per_rep = []
    for rep in range(args.replicates):
        seed = args.seed + rep
        sim = gen_cluster_dataset(
            design=args.design, delta_a=args.delta_a, delta_b=args.delta_b, B=args.B, seed=seed
        )
        ds = smooth_dataset(sim.dataset, args.iota) if args.iota > 0 else sim.dataset
        ids = ds.site_ids
        true_amp = Partition.from_labels(ids, sim.amp_partition)
        true_ph = Partition.from_labels(ids, sim.phase_partition)
        k_amp = true_amp.k
        k_ph = true_ph.k
        pa = hierarchical_cluster(amplitude_dissimilarity_matrix(ds, n_bins=args.n_bins), k_amp, args.linkage)
        pp = hierarchical_cluster(phase_dissimilarity_matrix(ds, n_bins=args.n_bins), k_ph, args.linkage)
        pl = hierarchical_cluster(l2_dissimilarity_matrix(ds, n_bins=args.n_bins), k_amp, args.linkage)
        pl_ph = hierarchical_cluster(l2_dissimilarity_matrix(ds, n_bins=args.n_bins), k_ph, args.linkage)
        vals = [
            rand_index(pa, true_amp),
            rand_index(pl, true_amp),
            rand_index(pp, true_ph),
            rand_index(pl_ph, true_ph),
        ]
        per_rep.append(vals)
        rows.append((seed, *(_fmt(v) for v in vals)))
        print(f"replicate seed={seed}: " + "  ".join(f"{c}={v:.3f}" for c, v in zip(cols, vals)), flush=True)
    means = np.mean(per_rep, axis=0)
    rows.append(("mean", *(_fmt(v) for v in means)))
    _write_table(out / "study_cluster.csv", "seed," + ",".join(cols), rows)
    print("means: " + "  ".join(f"{c}={v:.4g}" for c, v in zip(cols, means)))


def cmd_study(args) -> int:
    out = _out_dir(args)
    if args.design in KRIGING_DESIGNS:
        _study_kriging(args, out)
    else:
        _study_cluster(args, out)
    return 0


# -------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spafda",
        description="Amplitude-phase separation for spatially correlated functional data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a seeded synthetic dataset")
    p.add_argument("--design", required=True, choices=KRIGING_DESIGNS + CLUSTER_DESIGNS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--B", type=float, default=1.0, help="phase coefficient bound")
    p.add_argument("--delta-a", type=float, default=2.0)
    p.add_argument("--delta-b", type=float, default=0.5)
    p.add_argument("--sigma-a2", type=float, default=1.0)
    p.add_argument("--noise-sd", type=float, default=0.5)
    p.add_argument("--grid-size", type=int, default=101)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("krige", help="predict at unobserved sites (APK and OK)")
    p.add_argument("--data", required=True)
    p.add_argument("--target", nargs=2, action="append", metavar=("X", "Y"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_krige)

    p = sub.add_parser("loocv", help="leave-one-site-out E1..E5 for APK and OK")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_loocv)

    p = sub.add_parser("cluster", help="amplitude/phase/L2 clustering of one dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--linkage", default="average", choices=("average", "complete", "single"))
    p.add_argument("--truth", help="true_partitions.csv for rand-index scoring")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("study", help="seeded multi-replicate simulation study")
    p.add_argument("--design", required=True, choices=KRIGING_DESIGNS + CLUSTER_DESIGNS)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--B", type=float, default=1.0)
    p.add_argument("--delta-a", type=float, default=2.0)
    p.add_argument("--delta-b", type=float, default=0.5)
    p.add_argument("--linkage", default="average", choices=("average", "complete", "single"))
    _add_config_flags(p)
    p.set_defaults(func=cmd_study)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DatasetFormatError, FileNotFoundError, ValueError) as exc:
        print(f"spafda {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
