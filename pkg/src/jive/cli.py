"""Command-line interface: ``jive decompose | ranks | simulate | swiss``.

Exit status is 0 on success, 2 for invalid input or options, 3 for
numerical failures and 4 for file-system errors.
"""

import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import __version__
from .core import JiveRanks, reduce_then_estimate, variation_explained
from .exceptions import DegenerateBlockError, JiveError
from .io import (
    TRUTH_FORMAT,
    read_blocks,
    read_labels,
    labels_for,
    write_dataset,
    write_json,
    write_labels,
    write_matrix,
)
from .metrics import swiss_permutation_test, swiss_score
from .multiblock import preprocess
from .rank_selection import DEFAULT_ALPHA, DEFAULT_N_PERM, select_ranks
from .simulation import (
    SimulationSpec,
    generate_random_model,
    generate_toy,
    plant_cluster_signal,
)
from .sparse import BIC, SparsityConfig, estimate_sparse_jive

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

PROTOCOLS = ("toy", "random", "planted")


class CommandFailed(click.ClickException):
    def __init__(self, message, exit_code):
        super().__init__(message)
        self.exit_code = exit_code


class JiveGroup(click.Group):
    """Maps library exceptions to exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.ClickException:
            raise
        except (DegenerateBlockError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise CommandFailed(str(exc), EXIT_NUMERICAL) from exc
        except (JiveError, ValueError) as exc:
            raise CommandFailed(str(exc), EXIT_VALIDATION) from exc
        except OSError as exc:
            raise CommandFailed(str(exc), EXIT_IO) from exc


def _parse_block(ctx, param, values):
    out = []
    for v in values:
        name, sep, path = v.partition("=")
        if not sep or not name or not path:
            raise click.BadParameter(f"expected NAME=PATH, got {v!r}", ctx, param)
        out.append((name, path))
    return out


def _parse_ranks(ctx, param, value):
    if value is None or value == "auto":
        return value
    try:
        return JiveRanks.parse(value)
    except JiveError as exc:
        raise click.BadParameter(str(exc), ctx, param) from None


def _parse_sparse(ctx, param, value):
    if value is None:
        return None
    if value.strip().lower() == BIC:
        return [BIC]
    try:
        weights = [float(x) for x in value.split(",")]
    except ValueError:
        raise click.BadParameter(f"expected 'bic' or comma-separated numbers, got {value!r}",
                                 ctx, param) from None
    if any(not np.isfinite(w) or w < 0 for w in weights):
        raise click.BadParameter("penalty weights must be finite and nonnegative", ctx, param)
    return weights


def _sparsity(weights, k):
    # one value for everything, or the joint weight followed by one per block
    if len(weights) == 1:
        return SparsityConfig(weights[0], weights[0])
    if len(weights) != k + 1:
        raise click.BadParameter(
            f"--sparse needs 1 or {k + 1} values for {k} blocks, got {len(weights)}"
        )
    return SparsityConfig(weights[0], tuple(weights[1:]))


def _block_option(required=True):
    return click.option(
        "--block", "blocks", multiple=True, required=required, callback=_parse_block,
        metavar="NAME=PATH", help="Block name and matrix file; repeat for each block.",
    )


def _preprocess_options(f):
    f = click.option("--no-scale", is_flag=True, help="Skip division by the block norm.")(f)
    f = click.option("--no-center", is_flag=True, help="Skip row centering.")(f)
    return f


def _test_options(f):
    f = click.option("--n-jobs", type=int, default=None,
                     help="Workers for permutation replicates.")(f)
    f = click.option("--seed", type=int, default=0, show_default=True)(f)
    f = click.option("--alpha", type=click.FloatRange(0, 1, min_open=True, max_open=True),
                     default=DEFAULT_ALPHA, show_default=True)(f)
    f = click.option("--n-perm", type=click.IntRange(min=1), default=DEFAULT_N_PERM,
                     show_default=True, help="Permutations per test.")(f)
    return f


def _fmt(x):
    return f"{x:.4f}"


@click.group(cls=JiveGroup)
@click.version_option(__version__, prog_name="jive")
def cli():
    """Joint and individual variation in multi-block data."""


@cli.command()
@_block_option()
@click.option("--ranks", default="auto", show_default=True, callback=_parse_ranks,
              metavar="auto|r:r1,...,rk", help="Joint and individual ranks.")
@_test_options
@click.option("--sparse", callback=_parse_sparse, default=None, metavar="bic|W[,W1,...]",
              help="L1 penalty: 'bic', one weight, or the joint weight then one per block.")
@click.option("--max-iter", type=click.IntRange(min=1), default=500, show_default=True)
@click.option("--tol", type=click.FloatRange(min=0), default=1e-8, show_default=True)
@_preprocess_options
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False),
              help="Output directory (created if missing).")
def decompose(blocks, ranks, n_perm, alpha, seed, n_jobs, sparse, max_iter, tol,
              no_center, no_scale, out_dir):
    """Estimate joint, individual and residual structure."""
    ds = read_blocks(blocks)
    pre = preprocess(ds, center=not no_center, scale=not no_scale)
    selection = None
    if ranks == "auto":
        selection = select_ranks(pre, n_perm=n_perm, alpha=alpha, seed=seed, n_jobs=n_jobs)
        fitted_ranks = selection.ranks
    else:
        fitted_ranks = ranks
        fitted_ranks.check(pre.dims, pre.n_samples)
    if sparse is None:
        d = reduce_then_estimate(pre, fitted_ranks, max_iter=max_iter, tol=tol)
    else:
        config = _sparsity(sparse, pre.n_blocks)
        d = estimate_sparse_jive(pre, fitted_ranks, config, max_iter=max_iter, tol=tol)
    table = variation_explained(d, pre.matrices)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = _write_decomposition(out, pre, d)
    write_matrix(out / "variation_explained.tsv",
                 [[row["joint"], row["individual"], row["residual"]] for row in table],
                 pre.names, ("joint", "individual", "residual"), corner="block")
    files.append("variation_explained.tsv")

    argv = ["jive", "decompose"]
    for name, path in blocks:
        argv += ["--block", f"{name}={path}"]
    argv += ["--ranks", "auto" if ranks == "auto" else str(ranks),
             "--n-perm", str(n_perm), "--alpha", repr(alpha), "--seed", str(seed),
             "--max-iter", str(max_iter), "--tol", repr(tol)]
    if sparse is not None:
        argv += ["--sparse", ",".join(str(w) for w in sparse)]
    if no_center:
        argv.append("--no-center")
    if no_scale:
        argv.append("--no-scale")
    argv += ["--out", str(out_dir)]

    manifest = {
        "command": "decompose",
        "version": __version__,
        "command_line": argv,
        "config": {
            "blocks": [{"name": n, "path": p} for n, p in blocks],
            "ranks": "auto" if ranks == "auto" else str(ranks),
            "n_perm": n_perm,
            "alpha": alpha,
            "seed": seed,
            "sparse": sparse,
            "max_iter": max_iter,
            "tol": tol,
            "center": not no_center,
            "scale": not no_scale,
        },
        "samples": list(pre.sample_labels),
        "blocks": [{"name": b.name, "n_variables": b.shape[0],
                    "norm": b.total_variation} for b in pre.blocks],
        "ranks": {"joint": fitted_ranks.joint, "individual": list(fitted_ranks.individual)},
        "rank_selection": selection.as_dict() if selection else None,
        "convergence": {"converged": d.converged, "n_iter": d.n_iter,
                        "trace": d.trace, "notes": d.notes},
        "variation_explained": table,
        "files": files,
    }
    write_json(out / "manifest.json", manifest)

    click.echo(f"ranks\t{fitted_ranks}")
    click.echo(f"converged\t{d.converged}\t{d.n_iter} iterations")
    click.echo("block\tjoint%\tindividual%\tresidual%")
    for row in table:
        click.echo("\t".join([row["block"], _fmt(row["joint"]), _fmt(row["individual"]),
                              _fmt(row["residual"])]))
    for note in d.notes:
        click.echo(f"note: {note}", err=True)


def _write_decomposition(out, ds, d):
    samples = ds.sample_labels
    files = []

    def put(fname, data, rows, cols):
        write_matrix(out / fname, data, rows, cols)
        files.append(fname)

    joint_names = [f"joint_{k + 1}" for k in range(d.ranks.joint)]
    put("joint_scores.tsv", d.joint_scores, joint_names, samples)
    for i, b in enumerate(ds.blocks):
        rows = b.variable_labels
        ind_names = [f"individual_{k + 1}" for k in range(d.ranks.individual[i])]
        put(f"{b.name}_joint.tsv", d.joint[i], rows, samples)
        put(f"{b.name}_individual.tsv", d.individual[i], rows, samples)
        put(f"{b.name}_residual.tsv", d.residual[i], rows, samples)
        put(f"{b.name}_joint_loadings.tsv", d.joint_loadings[i], rows, joint_names)
        put(f"{b.name}_individual_loadings.tsv", d.individual_loadings[i], rows, ind_names)
        put(f"{b.name}_individual_scores.tsv", d.individual_scores[i], ind_names, samples)
    return files


@cli.command()
@_block_option()
@_test_options
@_preprocess_options
@click.option("--out", "out_file", type=click.Path(dir_okay=False), default=None,
              help="Also write the report as JSON.")
def ranks(blocks, n_perm, alpha, seed, n_jobs, no_center, no_scale, out_file):
    """Select joint and individual ranks by permutation testing."""
    ds = preprocess(read_blocks(blocks), center=not no_center, scale=not no_scale)
    sel = select_ranks(ds, n_perm=n_perm, alpha=alpha, seed=seed, n_jobs=n_jobs)
    names = ds.names
    click.echo(f"ranks\t{sel.ranks}")
    click.echo(f"joint_rank\t{sel.joint_rank}")
    for name, e, r in zip(names, sel.effective_ranks, sel.individual_ranks):
        click.echo(f"block\t{name}\teffective_rank\t{e}\tindividual_rank\t{r}")
    for name, pv in zip(names, sel.stage1_pvalues):
        click.echo("\t".join(["stage1_pvalues", name, *(f"{p:.6g}" for p in pv)]))
    click.echo("\t".join(["stage2_pvalues", *(f"{p:.6g}" for p in sel.stage2_pvalues)]))
    click.echo(f"alpha\t{alpha!r}")
    click.echo(f"n_perm\t{n_perm}")
    click.echo(f"seed\t{seed}")
    if out_file:
        doc = {"command": "ranks", "version": __version__, "blocks": [
            {"name": n, "path": p} for n, p in blocks],
            "center": not no_center, "scale": not no_scale, **sel.as_dict()}
        write_json(out_file, doc)


@cli.command()
@click.argument("protocol", type=click.Choice(PROTOCOLS))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--noiseless", is_flag=True, help="random: set the noise level to 0.")
@click.option("--n-samples", type=click.IntRange(min=1), default=None,
              help="random: number of samples (drawn when omitted).")
@click.option("--dims", default=None, metavar="P1,P2,...",
              help="random: rows per block (drawn when omitted).")
@click.option("--ranks", "true_ranks", default=None, callback=_parse_ranks,
              metavar="r:r1,...,rk", help="random: true ranks (drawn when omitted).")
@click.option("--sigma", type=click.FloatRange(min=0), default=None,
              help="random: noise standard deviation (drawn when omitted).")
@_block_option(required=False)
@click.option("--fraction", type=click.FloatRange(0, 1, min_open=True), default=0.05,
              show_default=True, help="planted: fraction of rows carrying the signal.")
def simulate(protocol, seed, out_dir, noiseless, n_samples, dims, true_ranks, sigma, blocks,
             fraction):
    """Write a synthetic dataset and its ground truth.

    PROTOCOL is one of: toy (two 50 x 100 blocks with a shared pattern and
    block-specific groups), random (a random factor model), planted (a
    two-cluster signal planted in column-shuffled blocks read with --block,
    or in a random model when no blocks are given).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    truth = {"protocol": protocol, "seed": seed, "version": __version__}
    if protocol == "toy":
        res, lx, ly = generate_toy(seed)
        ds = res.dataset
        files = write_dataset(out, ds)
        write_matrix(out / "V.tsv", res.truth["V"][None, :], ["V"], ds.sample_labels)
        write_labels(out / "labels_X.tsv", ds.sample_labels, lx)
        write_labels(out / "labels_Y.tsv", ds.sample_labels, ly)
        files += ["V.tsv", "labels_X.tsv", "labels_Y.tsv"]
        files += _write_truth_blocks(out, ds, res.truth)
        truth.update(noiseless=False, ranks={"joint": 1, "individual": [1, 1]})
    elif protocol == "random":
        spec = _random_spec(seed, noiseless, n_samples, dims, true_ranks, sigma)
        res = generate_random_model(spec)
        ds = res.dataset
        files = write_dataset(out, ds) + _write_truth_blocks(out, ds, res.truth)
        truth.update(noiseless=spec.noise_sigma == 0, spec=spec.to_dict(),
                     ranks={"joint": spec.ranks.joint,
                            "individual": list(spec.ranks.individual)},
                     factor_distributions=res.truth["factor_distributions"])
    else:
        ss = np.random.SeedSequence(seed)
        base_seed, plant_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
        if blocks:
            base = read_blocks(blocks)
            truth["source"] = [{"name": n, "path": p} for n, p in blocks]
        else:
            spec = SimulationSpec.random(base_seed)
            base = generate_random_model(spec).dataset
            truth["source"] = {"spec": spec.to_dict()}
        ds, labels = plant_cluster_signal(base, fraction=fraction, seed=plant_seed)
        files = write_dataset(out, ds)
        write_labels(out / "labels.tsv", ds.sample_labels, labels)
        files.append("labels.tsv")
        truth.update(fraction=fraction, noiseless=False)
    truth["files"] = files
    write_json(out / "truth.json", truth, format_tag=TRUTH_FORMAT)
    click.echo(f"wrote {len(files)} files to {out}")


def _random_spec(seed, noiseless, n_samples, dims, true_ranks, sigma):
    k = 2
    if dims is not None:
        try:
            dims = tuple(int(x) for x in dims.split(","))
        except ValueError:
            raise click.BadParameter(f"expected comma-separated integers, got {dims!r}",
                                     param_hint="--dims") from None
        k = len(dims)
    elif true_ranks is not None:
        k = len(true_ranks.individual)
    spec = SimulationSpec.random(seed, noisy=not noiseless, k=k)
    overrides = {}
    if n_samples is not None:
        overrides["n"] = n_samples
    if dims is not None:
        overrides["dims"] = dims
    if true_ranks is not None:
        overrides["ranks"] = true_ranks
    if sigma is not None:
        overrides["noise_sigma"] = 0.0 if noiseless else sigma
    return replace(spec, **overrides) if overrides else spec


def _write_truth_blocks(out, ds, truth):
    files = []
    for i, b in enumerate(ds.blocks):
        for part in ("joint", "individual", "noise"):
            fname = f"truth_{b.name}_{part}.tsv"
            write_matrix(out / fname, truth[part][i], b.variable_labels, ds.sample_labels)
            files.append(fname)
    return files


@cli.command()
@_block_option()
@click.option("--labels", "labels_path", required=True, type=click.Path(dir_okay=False),
              help="Two-column file: sample, group.")
@click.option("--n-perm", type=click.IntRange(min=1), default=999, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def swiss(blocks, labels_path, n_perm, seed):
    """Score how well groups separate in each matrix.

    Prints one row per matrix: SWISS score and the permutation p-value for
    equality with the first matrix.
    """
    ds = read_blocks(blocks)
    labels = labels_for(read_labels(labels_path), ds.sample_labels, labels_path)
    mats = ds.matrices
    click.echo("matrix\tswiss\tp_value")
    seeds = np.random.SeedSequence(seed).spawn(len(mats))
    for i, (name, m) in enumerate(zip(ds.names, mats)):
        score = swiss_score(m, labels)
        if i == 0:
            p = ""
        else:
            p = _fmt(swiss_permutation_test(mats[0], m, labels, n_perm=n_perm, seed=seeds[i]))
        click.echo(f"{name}\t{_fmt(score)}\t{p}")


def main(argv=None):
    """Console entry point; returns the exit status."""
    try:
        cli.main(args=argv, prog_name="jive", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo("Aborted!", err=True)
        return 1
    return EXIT_OK


def run():
    sys.exit(main())
