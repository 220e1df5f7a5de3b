"""
The command line handler of the system
"""
import argparse
import dataclasses
import datetime
import os
import sys
from typing import Any, Optional

import numpy as np

from moisture_learning.cnn import TrainConfig
from moisture_learning.dataset import (STAGES, MoistureClassSet, PipelineSpec, build_dataset,
                                       load_dataset, save_dataset)
from moisture_learning.evaluation import (IMAGING, SCENARIOS, ClutterRow, ScenarioReport,
                                          run_clutter_table, run_scenario)
from moisture_learning.knn import KnnModel
from moisture_learning.leak_tracking import LeakTrack, simulate_leak_series, track_leak
from moisture_learning.learn import LEARNERS, SavedModel, fit_learner, load_model, save_model
from reporting import log, tables
from scan_files.files import load_bscan, load_image, save_bscan, save_image
from subsurface_twin import constants
from subsurface_twin.acquisition import AcquisitionConfig, make_band_plan
from subsurface_twin.documents import load_document, save_document
from subsurface_twin.errors import ConfigurationError, DomainError, FileFormatError, \
    PipescanError
from subsurface_twin.forward import BScan, NoiseSpec, bscan_to_time, simulate_band, \
    simulate_bscan
from subsurface_twin.grid import ImagingGrid
from subsurface_twin.imaging import Image, TruncationSpec, baa_image, bpa_image, export_pgm
from subsurface_twin.preproc import ClutterReductionSpec, reduce_clutter
from subsurface_twin.scene import SoilModel, make_reference_scene, rasterize_scene
from subsurface_twin.scene_interface import load_scene
from subsurface_twin.threadproc import BandWorkerPool

EXIT_OK = 0
""" The exit code of a successful run """
EXIT_VALIDATION = 1
""" The exit code of invalid arguments, configurations or files """
EXIT_RUNTIME = 2
""" The exit code of any other failure """


class UsageError(PipescanError):
    """ The command line could not be parsed """


class _Parser(argparse.ArgumentParser):
    """ An argument parser that raises instead of exiting """

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def resolve_seed(seed: Optional[int]) -> int:
    """
    :param seed: The --seed value
    :return: The seed, falling back on PIPESCAN_SEED then DEFAULT_SEED
    """
    if seed is not None:
        return seed
    value = os.environ.get(constants.SEED_ENV_VAR)
    if value is None:
        return constants.DEFAULT_SEED
    try:
        return int(value)
    except ValueError as error:
        raise ConfigurationError(f"{constants.SEED_ENV_VAR}={value!r} is not an integer") \
            from error


class Run:
    """
    The context of one invocation: arguments, seed, output directory and produced files

    ...

    Attributes
    ----------

    args: argparse.Namespace
        The parsed arguments

    seed: int
        The resolved seed

    outputs: list[str]
        Every file written, recorded in run.json

    resolved: dict
        The configurations the run resolved, recorded in run.json

    """

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.seed = resolve_seed(args.seed)
        self.out_dir = args.out_dir
        self.pool = BandWorkerPool(args.threads)
        self.outputs: list[str] = []
        self.resolved: dict[str, Any] = {}

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def output(self, path: Optional[str], default_name: str) -> str:
        """
        :return: The given path, else the default name inside the output directory
        """
        path = path if path is not None else self.path(default_name)
        self.outputs.append(path)
        return path

    def write_run_record(self, status: str):
        record = {"subcommand": self.args.command, "argv": self.argv,
                  "arguments": {key: value for key, value in vars(self.args).items()
                                if key != "handler"},
                  "resolved": self.resolved, "seed": self.seed, "version": constants.VERSION,
                  "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
                  "outputs": self.outputs, "status": status}
        save_document(record, self.path("run.json"))


def _acquisition(args) -> AcquisitionConfig:
    config = AcquisitionConfig.reference()
    if getattr(args, "config", None):
        config = AcquisitionConfig.from_dict(load_document(args.config))
    return config


def _noise(args, seed: int) -> NoiseSpec:
    noise = NoiseSpec(rng_seed=seed)
    if getattr(args, "noise", None):
        noise = NoiseSpec.from_dict({"rng_seed": seed, **load_document(args.noise)})
    overrides = {}
    if getattr(args, "snr_db", None) is not None:
        overrides["snr_db"] = args.snr_db
    if getattr(args, "clutter_gain", None) is not None:
        overrides["clutter_gain"] = args.clutter_gain
    return dataclasses.replace(noise, **overrides)


def _classes(args) -> MoistureClassSet:
    if args.classes == 9:
        return MoistureClassSet.with_dry_class()
    if args.classes == 8:
        return MoistureClassSet.default()
    raise ConfigurationError(f"--classes accepts 8 or 9, got {args.classes}")


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(learning_rate=args.lr, batch_size=args.batch_size,
                       max_epochs=args.epochs, patience=args.patience, seed=seed)


def _config_from_bscan(bscan, height_m: float) -> AcquisitionConfig:
    """
    Rebuilds the acquisition of a B-scan from its axes, positions measured from the first one
    """
    if bscan.freq_hz.size < 2:
        raise DomainError("BAA needs a frequency step, the B-scan holds a single frequency")
    step = float(np.round(bscan.freq_hz[1] - bscan.freq_hz[0]))
    return AcquisitionConfig(scan_length_m=float(bscan.pos_m[-1] - bscan.pos_m[0]),
                             n_positions=bscan.pos_m.size, f_min_hz=float(bscan.freq_hz[0]),
                             f_max_hz=float(bscan.freq_hz[-1]), f_step_hz=step,
                             antenna_height_m=height_m)


def _save_time_preview(bscan, path: str):
    values = np.abs(bscan_to_time(bscan))
    grid = ImagingGrid.reference(1.0, nx=values.shape[1], nz=values.shape[0])
    export_pgm(Image(grid, values), path)


def _shift_image(image: Image, offset_m: float) -> Image:
    grid = dataclasses.replace(image.grid, x_min_m=image.grid.x_min_m + offset_m,
                               x_max_m=image.grid.x_max_m + offset_m)
    return dataclasses.replace(image, grid=grid)


def _model_context(run: Run) -> SavedModel:
    """
    Reads the model of the track command, the --imaging flag must agree with its training
    """
    args = run.args
    saved = load_model(args.model)
    if not saved.has_training_context:
        if args.imaging is None:
            raise ConfigurationError(f"{args.model} does not record its imaging pipeline, "
                                     f"pass --imaging")
        return saved
    if args.imaging is not None and args.imaging != saved.pipeline.stage:
        raise ConfigurationError(f"{args.model} was trained on {saved.pipeline.stage} images, "
                                 f"not {args.imaging}")
    return saved


# Subcommands

def simulate_command(run: Run) -> None:
    args = run.args
    config = _acquisition(args)
    noise = _noise(args, run.seed)
    scene = load_scene(args.scene) if args.scene else \
        make_reference_scene(args.sm, config.scan_length_m, seed=run.seed)
    contrast = rasterize_scene(scene, ImagingGrid.reference(config.scan_length_m))

    if args.band is not None:
        plan = make_band_plan(config, args.bands, args.band_spacing)
        bscan = simulate_band(contrast, plan.band(args.band), config, noise)
        run.resolved["band_plan"] = plan.to_dict()
    else:
        bscan = simulate_bscan(contrast, config, noise)

    run.resolved.update({"acquisition": config.to_dict(), "noise": noise.to_dict()})
    save_bscan(bscan, run.output(args.out, "bscan.mwbs"))
    if args.pgm:
        _save_time_preview(bscan, run.output(None, "bscan_time.pgm"))
    log.success(f"[Simulate] {bscan.shape[0]}x{bscan.shape[1]} B-scan written")


def reduce_command(run: Run) -> None:
    args = run.args
    spec = ClutterReductionSpec(args.n_remove)
    reduced = reduce_clutter(load_bscan(args.input), spec)
    run.resolved["reduction"] = {"n_remove": spec.n_remove}
    save_bscan(reduced, run.output(args.out, "reduced.mwbs"))
    log.success(f"[Reduce] removed {spec.n_remove} singular component(s)")


def image_command(run: Run) -> None:
    args = run.args
    bscan = load_bscan(args.input)
    if args.n_remove:
        bscan = reduce_clutter(bscan, ClutterReductionSpec(args.n_remove))

    x_start, x_end = float(bscan.pos_m[0]), float(bscan.pos_m[-1])
    eps_bg = SoilModel(args.eps_real, args.loss_tangent).background_permittivity()

    if args.method == "bpa":
        nx = args.nx or constants.IMAGE_PIXELS
        grid = ImagingGrid(x_start, x_end, 0.0, constants.IMAGE_DEPTH_M, nx, args.nz or nx)
        image = bpa_image(bscan, grid, eps_bg, args.spreading, args.height)
    else:
        config = _config_from_bscan(bscan, args.height)
        nx = args.nx or constants.BAA_PIXELS
        local = BScan(bscan.data, bscan.freq_hz, bscan.pos_m - x_start, bscan.provenance)
        spec = TruncationSpec.keep_rank(args.rank) if args.rank else \
            TruncationSpec.threshold(args.tau)
        image = baa_image(local, ImagingGrid.reference(config.scan_length_m, nx, args.nz or nx),
                          config, eps_bg, spec)
        image = _shift_image(image, x_start)
        grid = image.grid
        run.resolved["acquisition"] = config.to_dict()

    run.resolved.update({"grid": grid.to_dict(), "method": args.method,
                         "n_frequencies": int(bscan.freq_hz.size)})
    save_image(image, run.output(args.out, "image.mwim"))
    if args.pgm:
        export_pgm(image, run.output(None, "image.pgm"))
    log.success(f"[Image] {args.method} image {grid.nz}x{grid.nx} written")


def dataset_command(run: Run) -> None:
    args = run.args
    config = _acquisition(args)
    plan = make_band_plan(config, args.bands, args.band_spacing)
    pipeline = PipelineSpec(stage=args.stage, n_remove=args.n_remove,
                            wideband_first=args.wideband_first)
    classes = _classes(args)
    noise = _noise(args, run.seed)

    dataset = build_dataset(classes, config, plan, pipeline, run.seed, noise,
                            args.scenario_id, run.pool)
    directory = args.out if args.out is not None else run.path("dataset")
    run.outputs.append(save_dataset(dataset, directory))
    run.resolved.update({"acquisition": config.to_dict(), "band_plan": plan.to_dict(),
                         "pipeline": pipeline.to_dict(), "classes": classes.to_dict(),
                         "noise": noise.to_dict()})
    log.success(f"[Dataset] {len(dataset.samples)} samples written to {directory}")


def train_command(run: Run) -> None:
    args = run.args
    dataset = load_dataset(args.dataset)
    config = _train_config(args, run.seed)
    model, history = fit_learner(args.learner, dataset, run.seed, config, args.k)

    if isinstance(model, KnnModel):
        save_model(model, dataset, run.output(args.out, "model.mwkn"))
    else:
        save_model(model, dataset, run.output(args.out, "model.mwnn"), config)
        rows = [[s.epoch, s.train_loss, s.train_accuracy, s.val_loss, s.val_accuracy]
                for s in history]
        tables.write_csv(["epoch", "train_loss", "train_accuracy", "val_loss", "val_accuracy"],
                         rows, run.output(None, "history.csv"))

    run.resolved.update({"learner": args.learner, "train": config.to_dict(), "k": args.k})
    log.success(f"[Train] {args.learner} model written")


def _write_reports(run: Run, reports: list[ScenarioReport]):
    rows = [[r.scenario_id, SCENARIOS[r.scenario_id].description, r.learner, r.imaging,
             r.accuracy] for r in reports]
    headers = ["scenario", "description", "learner", "imaging", "accuracy"]

    save_document({"reports": [report.to_dict() for report in reports]},
                  run.output(None, "report.json"))
    tables.write_text(tables.format_table(headers, rows), run.output(None, "report.txt"))

    for report in reports:
        counts = report.confusion.counts
        labels = [str(index) for index in range(counts.shape[0])]
        tables.write_csv(["actual\\predicted"] + labels,
                         [[labels[row]] + counts[row].tolist() for row in range(len(labels))],
                         run.output(None, f"confusion_{report.scenario_id}.csv"))
        tables.write_heatmap_pgm(report.confusion.row_normalized(),
                                 run.output(None, f"confusion_{report.scenario_id}.pgm"))


def eval_command(run: Run) -> None:
    args = run.args
    ids = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    if any(scenario_id not in SCENARIOS for scenario_id in ids):
        raise ConfigurationError(f"unknown scenario {args.scenario!r}, expected one of "
                                 f"{sorted(SCENARIOS)} or all")

    reports = []
    for scenario_id in ids:
        report, _, _ = run_scenario(SCENARIOS[scenario_id], args.learner, args.imaging,
                                    run.seed, _acquisition(args), _classes(args),
                                    _noise(args, run.seed), args.bands,
                                    _train_config(args, run.seed), run.pool)
        reports.append(report)

    run.resolved["scenarios"] = [report.config for report in reports]
    _write_reports(run, reports)


def _clutter_rows_table(rows: list[ClutterRow]) -> tuple[list[str], list[list]]:
    return (["soil", "clutter", "density", "estimated", "clutter_free"],
            [[f"{row.sm_truth:.0%}", row.kind, row.density, row.predicted, row.clutter_free]
             for row in rows])


def clutter_command(run: Run) -> None:
    args = run.args
    noise = _noise(args, run.seed)
    report, dataset, model = run_scenario(SCENARIOS["reference"], args.learner, args.imaging,
                                          run.seed, _acquisition(args), _classes(args), noise,
                                          args.bands, _train_config(args, run.seed), run.pool)

    rows = run_clutter_table(model, dataset.classes, dataset.pipeline, dataset.config,
                             dataset.band_plan, run.seed, noise, run.pool)
    headers, table = _clutter_rows_table(rows)

    run.resolved.update({"reference": report.config})
    save_document({"reference_accuracy": report.accuracy,
                   "rows": [row.__dict__ for row in rows]}, run.output(None, "clutter.json"))
    tables.write_text(tables.format_table(headers, table), run.output(None, "clutter.txt"))
    tables.write_csv(headers, table, run.output(None, "clutter.csv"))


def _load_scans(directory: str) -> list[list[Image]]:
    """
    Reads one sub-directory of band MWIM files per scan, both in name order
    """
    scans = []
    for name in sorted(os.listdir(directory)):
        scan_dir = os.path.join(directory, name)
        if os.path.isdir(scan_dir):
            scans.append([load_image(os.path.join(scan_dir, file))
                          for file in sorted(os.listdir(scan_dir)) if file.endswith(".mwim")])
    return scans


def track_command(run: Run) -> None:
    args = run.args
    config = _acquisition(args)
    noise = _noise(args, run.seed)

    if args.model:
        saved = _model_context(run)
        model, classes = saved.model, saved.classes
        if saved.has_training_context:
            pipeline, plan, config = saved.pipeline, saved.band_plan, saved.config
        else:
            pipeline = PipelineSpec(stage=args.imaging)
            plan = make_band_plan(config, args.bands, constants.BAND_SPACING_HZ)
    else:
        _, dataset, model = run_scenario(SCENARIOS["reference"], args.learner,
                                         args.imaging or "bpa", run.seed, config,
                                         _classes(args), noise, args.bands,
                                         _train_config(args, run.seed), run.pool)
        classes, pipeline, plan = dataset.classes, dataset.pipeline, dataset.band_plan

    scans = _load_scans(args.scans) if args.scans else \
        simulate_leak_series(config, plan, pipeline, run.seed, args.n_scans, noise, run.pool)

    track: LeakTrack = track_leak(scans, model, classes, reference_sm=args.reference_sm)

    run.resolved.update({"acquisition": config.to_dict(), "band_plan": plan.to_dict(),
                         "pipeline": pipeline.to_dict(), "classes": classes.to_dict()})
    save_document(track.to_dict(), run.output(None, "track.json"))
    tables.write_csv(["time_min", "sm_estimate", "fitted"],
                     [[t, sm, track.fitted(t)] for t, sm in zip(track.times_min,
                                                                track.sm_estimates)],
                     run.output(None, "track.csv"))
    log.success(f"[Track] {len(scans)} scans, slope {track.slope_per_min * 60:.4f} per hour")


# Parser

def _add_noise_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--noise", help="noise document (JSON or YAML)")
    parser.add_argument("--snr-db", type=float)
    parser.add_argument("--clutter-gain", type=float)


def _add_learning_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--learner", choices=LEARNERS, default="cnn")
    parser.add_argument("--imaging", choices=IMAGING, default="bpa")
    parser.add_argument("--bands", type=int, default=constants.N_BANDS)
    parser.add_argument("--classes", type=int, default=8, help="8 levels, or 9 with dry soil")
    parser.add_argument("--epochs", type=int, default=constants.MAX_EPOCHS)
    parser.add_argument("--patience", type=int, default=constants.PATIENCE)
    parser.add_argument("--batch-size", type=int, default=constants.BATCH_SIZE)
    parser.add_argument("--lr", type=float, default=constants.LEARNING_RATE)
    parser.add_argument("--config", help="acquisition document (JSON or YAML)")
    _add_noise_flags(parser)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pipescan",
                     description="Soil moisture estimation around buried leaky pipes")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out-dir", default="out")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    simulate = commands.add_parser("simulate", help="scene -> MWBS")
    simulate.add_argument("--scene", help="scene document (JSON or YAML)")
    simulate.add_argument("--sm", type=float, default=0.5,
                          help="moisture of the reference scene when no scene is given")
    simulate.add_argument("--config", help="acquisition document (JSON or YAML)")
    simulate.add_argument("--band", type=int)
    simulate.add_argument("--bands", type=int, default=constants.N_BANDS)
    simulate.add_argument("--band-spacing", type=float, default=constants.BAND_SPACING_HZ)
    simulate.add_argument("--pgm", action="store_true")
    simulate.add_argument("--out")
    _add_noise_flags(simulate)
    simulate.set_defaults(handler=simulate_command)

    reduce = commands.add_parser("reduce", help="MWBS -> clutter reduced MWBS")
    reduce.add_argument("--in", dest="input", required=True)
    reduce.add_argument("--n-remove", type=int, default=constants.DEFAULT_N_REMOVE)
    reduce.add_argument("--out")
    reduce.set_defaults(handler=reduce_command)

    image = commands.add_parser("image", help="MWBS -> MWIM")
    image.add_argument("--in", dest="input", required=True)
    image.add_argument("--method", choices=IMAGING, default="bpa")
    image.add_argument("--n-remove", type=int, default=0)
    image.add_argument("--eps-real", type=float, default=constants.DRY_SOIL_PERMITTIVITY)
    image.add_argument("--loss-tangent", type=float, default=constants.SOIL_LOSS_TANGENT)
    image.add_argument("--height", type=float, default=constants.ANTENNA_HEIGHT_M)
    image.add_argument("--nx", type=int)
    image.add_argument("--nz", type=int)
    image.add_argument("--tau", type=float, default=constants.DEFAULT_TAU)
    image.add_argument("--rank", type=int)
    image.add_argument("--spreading", action="store_true")
    image.add_argument("--pgm", action="store_true")
    image.add_argument("--out")
    image.set_defaults(handler=image_command)

    dataset = commands.add_parser("dataset", help="generate a labelled dataset")
    dataset.add_argument("--config", help="acquisition document (JSON or YAML)")
    dataset.add_argument("--bands", type=int, default=constants.N_BANDS)
    dataset.add_argument("--band-spacing", type=float, default=constants.BAND_SPACING_HZ)
    dataset.add_argument("--stage", choices=STAGES, default="bpa")
    dataset.add_argument("--n-remove", type=int, default=constants.DEFAULT_N_REMOVE)
    dataset.add_argument("--wideband-first", action="store_true")
    dataset.add_argument("--classes", type=int, default=8)
    dataset.add_argument("--scenario-id", default="dataset")
    dataset.add_argument("--out")
    _add_noise_flags(dataset)
    dataset.set_defaults(handler=dataset_command)

    train = commands.add_parser("train", help="fit a classifier on a dataset")
    train.add_argument("--dataset", required=True)
    train.add_argument("--learner", choices=LEARNERS, default="cnn")
    train.add_argument("--k", type=int, default=constants.KNN_K)
    train.add_argument("--epochs", type=int, default=constants.MAX_EPOCHS)
    train.add_argument("--patience", type=int, default=constants.PATIENCE)
    train.add_argument("--batch-size", type=int, default=constants.BATCH_SIZE)
    train.add_argument("--lr", type=float, default=constants.LEARNING_RATE)
    train.add_argument("--out")
    train.set_defaults(handler=train_command)

    evaluate = commands.add_parser("eval", help="score a learner on an accuracy scenario")
    evaluate.add_argument("--scenario", default="reference")
    _add_learning_flags(evaluate)
    evaluate.set_defaults(handler=eval_command)

    clutter = commands.add_parser("clutter", help="clutter robustness table")
    _add_learning_flags(clutter)
    clutter.set_defaults(handler=clutter_command)

    track = commands.add_parser("track", help="leak time series")
    track.add_argument("--model", help="MWNN or MWKN file, trained on the reference otherwise")
    track.add_argument("--scans", help="directory with one sub-directory of MWIM files per scan")
    track.add_argument("--n-scans", type=int, default=constants.LEAK_SCANS)
    track.add_argument("--reference-sm", type=float)
    _add_learning_flags(track)
    track.set_defaults(handler=track_command, imaging=None)

    return parser


def main(argv: list[str]) -> int:
    """
    :param argv: The command line arguments, without the program name
    :return: The exit code
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as error:
        print(f"pipescan: error: {error}", file=sys.stderr)
        return EXIT_VALIDATION

    os.makedirs(args.out_dir, exist_ok=True)
    verbosity = log.QUIET if args.quiet else log.VERBOSE if args.verbose else log.NORMAL
    log.configure(os.path.join(args.out_dir, "log.txt"), verbosity)

    run = None
    try:
        run = Run(args, argv)
        args.handler(run)
        run.write_run_record("ok")
        return EXIT_OK
    except (DomainError, ConfigurationError, FileFormatError, UsageError) as error:
        log.error(str(error))
        code = EXIT_VALIDATION
    except Exception as error:
        log.error(f"{type(error).__name__}: {error}")
        code = EXIT_RUNTIME

    if run is not None:
        run.write_run_record("failed")
    return code
