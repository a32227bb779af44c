"""``qmusic`` command-line driver.

Verbs map onto pipeline stages::

    simulate     snapshots, sample covariance, beam-sweep powers
    reconstruct  covariance estimate and density matrix
    vqdme        variational eigensolver on the density matrix
    estimate     MUSIC spectrum, labeling histogram, DOA estimates
    pipeline     all of the above plus a run manifest

Exit codes: 0 success, 1 configuration/input error, 2 numerical failure,
3 optimizer did not converge.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
import zlib
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .. import __version__
from ..array_signal import (
    ArrayConfig,
    BeamSweepObservation,
    BeamSweepPlan,
    build_a_matrix,
    generate_snapshots,
    observe,
    sample_covariance,
)
from ..doa import estimate_doa, labeling_distribution, music_spectrum, signal_projection_spectrum, subspaces
from ..errors import ConfigError, DimensionError
from ..numerics import hermitian_eig
from ..qsim.states import DensityMatrix
from ..recon import ReconResult, reconstruct_classical, reconstruct_quantum
from ..vqdme import AnsatzConfig, VQDMEConfig, VQDMEResult, WeightVector, ansatz_unitary, example_density, optimize
from . import io
from .config import PipelineConfig, load_config

log = logging.getLogger("qmusic")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NOT_CONVERGED = 0, 1, 2, 3
RECON_MODES = ("classical", "spectral", "circuit")
LABEL_MODES = ("exact", "sampled")


class StageFailure(Exception):
    def __init__(self, stage: str, code: int, message: str):
        super().__init__(f"stage '{stage}' failed: {message}")
        self.stage = stage
        self.code = code


def stage_seed(seed: int, stage: str) -> int:
    """Independent 64-bit seed per stage, derived from the run seed."""
    ss = np.random.SeedSequence([seed % 2**64, zlib.crc32(stage.encode())])
    return int(ss.generate_state(1, np.uint64)[0])


class Run:
    def __init__(self, cfg: PipelineConfig | None, out: Path, seed: int):
        self.cfg = cfg
        self.out = out
        self.seed = seed
        self.timings: dict[str, float] = {}
        self.files: dict[str, list[str]] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        except StageFailure:
            raise
        except (ConfigError, DimensionError) as exc:
            raise StageFailure(name, EXIT_CONFIG, str(exc)) from exc
        except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            raise StageFailure(name, EXIT_NUMERICAL, str(exc)) from exc
        finally:
            self.timings[name] = time.perf_counter() - t0

    def record(self, stage: str, path: Path) -> None:
        self.files.setdefault(stage, []).append(str(path.relative_to(self.out)))


# -- serialization helpers ----------------------------------------------------

def _recon_doc(res: ReconResult) -> dict:
    tr = res.transition
    return {
        "path": res.path,
        "r_hat": io.encode_complex(res.r_hat),
        "r_hat_matrix": io.encode_complex(res.r_hat_matrix),
        "rho": io.encode_complex(res.rho.matrix),
        "success_probability": res.success_probability,
        "fidelity_to_classical": res.fidelity_to_classical,
        "transition": None if tr is None else {
            "fidelity": tr.fidelity,
            "phase_bits": tr.phase_bits,
            "walk_operator_dim": tr.walk_operator_dim,
            "postselection_probability": tr.postselection_probability,
        },
    }


def _vqdme_doc(res: VQDMEResult, ansatz: AnsatzConfig, reference: np.ndarray) -> dict:
    return {
        "theta_star": res.theta_star.tolist(),
        "eigenvalue_estimates": res.eigenvalue_estimates.tolist(),
        "eigenvectors": io.encode_complex(np.stack([s.amplitudes for s in res.eigenvector_states])),
        "objective": res.objective,
        "upper_bound": res.upper_bound,
        "iterations_used": res.iterations_used,
        "converged": res.converged,
        "ordered": res.ordered,
        "ansatz": {"num_qubits": ansatz.num_qubits, "depth": ansatz.depth, "entangler": ansatz.entangler},
        "reference_eigenvalues": reference.tolist(),
    }


def load_observation(path: Path) -> BeamSweepObservation:
    doc = io.read_json(path, "observation")
    cfg = ArrayConfig(doc["num_elements"], doc["spacing_ratio"])
    plan = BeamSweepPlan(tuple(doc["sweep_angles"]))
    return BeamSweepObservation(build_a_matrix(plan, cfg), np.asarray(doc["powers"]), plan)


def load_rho(path: Path) -> DensityMatrix:
    doc = io.read_json(path, "reconstruction")
    return DensityMatrix(io.decode_complex(doc["rho"]))


def load_v_star(path: Path) -> np.ndarray:
    doc = io.read_json(path, "vqdme")
    a = doc["ansatz"]
    return ansatz_unitary(AnsatzConfig(a["num_qubits"], a["depth"], a["entangler"]), doc["theta_star"])


# -- stages -------------------------------------------------------------------

def do_simulate(run: Run) -> tuple[np.ndarray, BeamSweepObservation]:
    cfg = run.cfg
    with run.stage("simulate"):
        y = generate_snapshots(cfg.array, cfg.scenario, stage_seed(run.seed, "snapshots"))
        r = sample_covariance(y)
        obs = observe(r, cfg.sweep, cfg.array)
        run.record("simulate", io.write_json(run.out / "snapshots.json", {
            "num_elements": cfg.array.num_elements,
            "snapshots": io.encode_complex(y),
            "sample_covariance": io.encode_complex(r),
        }, "snapshots"))
        run.record("simulate", io.write_json(run.out / "observation.json", {
            "num_elements": cfg.array.num_elements,
            "spacing_ratio": cfg.array.spacing_ratio,
            "sweep_angles": list(cfg.sweep.angles),
            "powers": obs.powers.tolist(),
        }, "observation"))
        run.record("simulate", io.write_csv(
            run.out / "powers.csv", io.CSV_COLUMNS["powers"], zip(cfg.sweep.angles, obs.powers)))
    log.info("simulated %d snapshots, %d beam powers", y.shape[1], obs.powers.size)
    return r, obs


def do_reconstruct(run: Run, obs: BeamSweepObservation) -> ReconResult:
    cfg = run.cfg
    mode = cfg.modes.reconstruction
    with run.stage("reconstruct"):
        if mode == "classical":
            res = reconstruct_classical(obs, cfg.regularization)
        else:
            res = reconstruct_quantum(obs, cfg.regularization, mode)
        run.record("reconstruct", io.write_json(run.out / "reconstruction.json", _recon_doc(res), "reconstruction"))
    msg = f"reconstruction path={res.path} success_probability={res.success_probability:.6f}"
    if res.fidelity_to_classical is not None:
        msg += f" fidelity_to_classical={res.fidelity_to_classical:.12f}"
    if res.transition is not None:
        t = res.transition
        msg += f" transition_fidelity={t.fidelity:.8f} phase_bits={t.phase_bits} walk_dim={t.walk_operator_dim}"
    print(msg)
    return res


def do_vqdme(run: Run, rho: DensityMatrix, vq: VQDMEConfig, ansatz: AnsatzConfig) -> VQDMEResult:
    with run.stage("vqdme"):
        res = optimize(rho, vq, ansatz)
        reference = hermitian_eig(rho.matrix).eigenvalues[: vq.num_states]
        run.record("vqdme", io.write_json(run.out / "vqdme.json", _vqdme_doc(res, ansatz, reference), "vqdme"))
        rows = (
            [k, c, *lam]
            for k, (c, lam) in enumerate(zip(res.objective_trace, res.eigenvalue_trace))
        )
        run.record("vqdme", io.write_csv(
            run.out / "convergence.csv", io.convergence_columns(vq.num_states), rows))
    print("vqdme eigenvalues  " + " ".join(f"{x:.6f}" for x in res.eigenvalue_estimates))
    print("exact eigenvalues  " + " ".join(f"{x:.6f}" for x in reference))
    print(f"vqdme iterations={res.iterations_used} converged={res.converged} "
          f"objective_gap={res.gap:.3e} max_abs_error={np.max(np.abs(res.eigenvalue_estimates - reference)):.3e}")
    return res


def do_estimate(run: Run, r_sample: np.ndarray, v_star: np.ndarray) -> dict:
    cfg = run.cfg
    L = cfg.num_sources
    with run.stage("estimate"):
        u_s, u_n = subspaces(r_sample, L)
        music = music_spectrum(u_n, cfg.grid, cfg.array)
        proj = signal_projection_spectrum(u_s, cfg.grid, cfg.array)
        seed = stage_seed(run.seed, "labeling")
        lab = labeling_distribution(v_star, L, cfg.grid, cfg.array, cfg.modes.labeling, cfg.modes.shots, seed)
        est_music = estimate_doa(music, L)
        est_lab = estimate_doa(lab, L, cfg.modes.smoothing_deg)
        angles = cfg.grid.angles
        run.record("estimate", io.write_csv(run.out / "music_spectrum.csv", io.CSV_COLUMNS["spectrum"],
                                            zip(angles, music.values)))
        run.record("estimate", io.write_csv(run.out / "projection_spectrum.csv", io.CSV_COLUMNS["spectrum"],
                                            zip(angles, proj.values)))
        counts = lab.samples if lab.samples is not None else np.zeros(len(angles), dtype=int)
        run.record("estimate", io.write_csv(run.out / "histogram.csv", io.CSV_COLUMNS["histogram"],
                                            zip(angles, counts, lab.distribution)))
        doc = {
            "music": {"angles": est_music.angles.tolist(), "degenerate": est_music.degenerate},
            "labeling": {
                "angles": est_lab.angles.tolist(),
                "degenerate": est_lab.degenerate,
                "mode": cfg.modes.labeling,
                "shots": lab.shots,
                "success_probability": lab.success_probability,
            },
            "true_angles": list(cfg.scenario.angles),
            "agreement_deg": float(np.max(np.abs(est_music.angles - est_lab.angles))),
        }
        run.record("estimate", io.write_json(run.out / "estimate.json", doc, "estimate"))
    print("music angles      " + " ".join(f"{a:.6f}" for a in est_music.angles)
          + (" (degenerate)" if est_music.degenerate else ""))
    print("labeling angles   " + " ".join(f"{a:.6f}" for a in est_lab.angles)
          + (" (degenerate)" if est_lab.degenerate else ""))
    print(f"music/labeling max difference {doc['agreement_deg']:.6f} deg")
    return doc


# -- commands -----------------------------------------------------------------

def _mode_overrides(cfg_modes: dict, mode: str | None) -> dict:
    modes = dict(cfg_modes)
    if mode in RECON_MODES:
        modes["reconstruction"] = mode
    elif mode in LABEL_MODES:
        modes["labeling"] = mode
    return modes


def _load(args) -> PipelineConfig:
    if args.config is None:
        raise ConfigError("--config is required for this command")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    cfg = load_config(args.config, overrides)
    if args.mode is None:
        return cfg
    overrides["modes"] = _mode_overrides(cfg.raw.get("modes", {}), args.mode)
    return load_config(args.config, overrides)


def _out_dir(args, cfg: PipelineConfig | None) -> Path:
    return Path(args.out or (cfg.output if cfg else "out"))


def cmd_simulate(args) -> int:
    cfg = _load(args)
    run = Run(cfg, _out_dir(args, cfg), cfg.seed)
    do_simulate(run)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _load(args)
    run = Run(cfg, _out_dir(args, cfg), cfg.seed)
    if args.observation:
        with run.stage("load"):
            obs = load_observation(Path(args.observation))
    else:
        _, obs = do_simulate(run)
    do_reconstruct(run, obs)
    return EXIT_OK


def cmd_vqdme(args) -> int:
    if args.paper_example:
        seed = args.seed if args.seed is not None else 0
        run = Run(None, Path(args.out or "out"), seed)
        rho = example_density(seed)
        vq = VQDMEConfig(WeightVector((4.0, 3.0, 2.0, 1.0)), seed=seed)
        res = do_vqdme(run, rho, vq, AnsatzConfig(2))
        truth = np.array([0.4, 0.3, 0.2, 0.1])
        err = float(np.max(np.abs(res.eigenvalue_estimates - truth)))
        print(f"4x4 example: max |lambda - (0.4, 0.3, 0.2, 0.1)| = {err:.3e} "
              f"({'within' if err <= 0.02 else 'outside'} 0.02)")
        return EXIT_OK if res.converged else EXIT_NOT_CONVERGED
    cfg = _load(args)
    run = Run(cfg, _out_dir(args, cfg), cfg.seed)
    if args.rho:
        with run.stage("load"):
            rho = load_rho(Path(args.rho))
    else:
        _, obs = do_simulate(run)
        rho = do_reconstruct(run, obs).rho
    res = do_vqdme(run, rho, cfg.vqdme, cfg.ansatz)
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def cmd_estimate(args) -> int:
    cfg = _load(args)
    run = Run(cfg, _out_dir(args, cfg), cfg.seed)
    r_sample, obs = do_simulate(run)
    status = EXIT_OK
    if args.vqdme:
        with run.stage("load"):
            v_star = load_v_star(Path(args.vqdme))
    else:
        rho = do_reconstruct(run, obs).rho
        res = do_vqdme(run, rho, cfg.vqdme, cfg.ansatz)
        v_star = ansatz_unitary(cfg.ansatz, res.theta_star)
        status = EXIT_OK if res.converged else EXIT_NOT_CONVERGED
    do_estimate(run, r_sample, v_star)
    return status


def cmd_pipeline(args) -> int:
    cfg = _load(args)
    run = Run(cfg, _out_dir(args, cfg), cfg.seed)
    r_sample, obs = do_simulate(run)
    rho = do_reconstruct(run, obs).rho
    res = do_vqdme(run, rho, cfg.vqdme, cfg.ansatz)
    do_estimate(run, r_sample, ansatz_unitary(cfg.ansatz, res.theta_star))
    manifest = {
        "config_hash": cfg.digest(),
        "version": __version__,
        "seed": int(cfg.seed),
        "timings": run.timings,
        "files": run.files,
    }
    io.write_json(run.out / "manifest.json", manifest, "manifest")
    print(f"manifest written to {run.out / 'manifest.json'}")
    return EXIT_OK if res.converged else EXIT_NOT_CONVERGED


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qmusic", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--seed", type=_u64, help="override the configured seed")
        sp.add_argument("--mode", choices=RECON_MODES + LABEL_MODES,
                        help="reconstruction path or labeling mode")
        sp.add_argument("--out", help="output directory")
        return sp

    common(sub.add_parser("simulate", help="generate snapshots and beam-sweep powers")).set_defaults(func=cmd_simulate)
    sp = common(sub.add_parser("reconstruct", help="reconstruct the covariance and density matrix"))
    sp.add_argument("--observation", help="observation.json from a previous simulate run")
    sp.set_defaults(func=cmd_reconstruct)
    sp = common(sub.add_parser("vqdme", help="run the variational eigensolver"))
    sp.add_argument("--rho", help="reconstruction.json holding the density matrix")
    sp.add_argument("--paper-example", action="store_true",
                    help="4x4 example with eigenvalues (0.4, 0.3, 0.2, 0.1)")
    sp.set_defaults(func=cmd_vqdme)
    sp = common(sub.add_parser("estimate", help="MUSIC and labeling direction estimates"))
    sp.add_argument("--vqdme", help="vqdme.json providing V(theta*)")
    sp.set_defaults(func=cmd_estimate)
    common(sub.add_parser("pipeline", help="run every stage and write a manifest")).set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
