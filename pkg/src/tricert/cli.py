"""Command-line interface.

Exit codes: 0 certified optimal (or success), 2 suboptimal, 1 input error.

Scene files are plain text::

    n
    <3 lines of 4 reals>   # camera 1, row-major
    ...                    # cameras 2..n
    obs                    # optional
    <n lines of 2 reals>
    truth                  # optional
    <3 reals>

Blank lines and ``#`` comments are ignored. ``--json-scene`` reads the same
data from a JSON object with keys ``cameras``, ``obs`` and ``truth``.
"""
import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from . import geometry, harness
from .certify import CertifyConfig, triangulate
from .errors import InvalidInputError, TriangulationError
from .sdp import SolverConfig

JSON_SCHEMA = 1
EXIT_OK, EXIT_INPUT, EXIT_SUBOPTIMAL = 0, 1, 2


class SceneParseError(InvalidInputError):
    def __init__(self, path, lineno, message):
        where = f"{path}:{lineno}" if lineno else str(path)
        super().__init__(f"{where}: {message}")
        self.lineno = lineno


@dataclass
class Scene:
    cameras: List[np.ndarray]
    obs: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _reals(path, lineno, line, count):
    parts = line.split()
    if len(parts) != count:
        raise SceneParseError(path, lineno, f"expected {count} numbers, found {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise SceneParseError(path, lineno, f"not a number in {line!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise SceneParseError(path, lineno, "non-finite value")
    return vals


def parse_scene(text, path="<scene>") -> Scene:
    lines = list(_content_lines(text))
    if not lines:
        raise SceneParseError(path, 0, "empty scene file")
    it = iter(lines)
    lineno, line = next(it)
    try:
        n = int(line)
    except ValueError:
        raise SceneParseError(path, lineno, f"expected camera count, found {line!r}") from None
    if n < 2:
        raise SceneParseError(path, lineno, "need at least two cameras")

    def take(what):
        try:
            return next(it)
        except StopIteration:
            raise SceneParseError(path, lines[-1][0], f"unexpected end of file reading {what}") from None

    cameras = []
    for c in range(n):
        rows = []
        for r in range(3):
            lineno, line = take(f"camera {c + 1}")
            rows.append(_reals(path, lineno, line, 4))
        cameras.append(np.array(rows))
    scene = Scene(cameras)
    for lineno, line in it:
        key = line.lower()
        if key == "obs" and scene.obs is None:
            pts = []
            for _ in range(n):
                ln, l = take("observations")
                pts.append(_reals(path, ln, l, 2))
            scene.obs = np.array(pts).reshape(-1)
        elif key == "truth" and scene.truth is None:
            ln, l = take("ground truth")
            scene.truth = np.array(_reals(path, ln, l, 3))
        else:
            raise SceneParseError(path, lineno, f"unexpected line {line!r}")
    return scene


def parse_obs(text, n, path="<obs>") -> np.ndarray:
    lines = list(_content_lines(text))
    if lines and lines[0][1].lower() == "obs":
        lines = lines[1:]
    if len(lines) != n:
        lineno = lines[-1][0] if lines else 0
        raise SceneParseError(path, lineno, f"expected {n} observation lines, found {len(lines)}")
    return np.array([_reals(path, ln, l, 2) for ln, l in lines]).reshape(-1)


def parse_json_scene(text, path="<scene>") -> Scene:
    try:
        doc = json.loads(text)
        cameras = [np.asarray(P, dtype=float) for P in doc["cameras"]]
        obs = doc.get("obs")
        truth = doc.get("truth")
        scene = Scene(cameras,
                      None if obs is None else np.asarray(obs, dtype=float).reshape(-1),
                      None if truth is None else np.asarray(truth, dtype=float).reshape(-1))
    except (ValueError, KeyError, TypeError) as exc:
        raise SceneParseError(path, getattr(exc, "lineno", 0), f"invalid JSON scene: {exc}") from None
    if len(scene.cameras) < 2 or any(P.shape != (3, 4) for P in scene.cameras):
        raise SceneParseError(path, 0, "need at least two 3x4 cameras")
    n = len(scene.cameras)
    if scene.obs is not None and scene.obs.size != 2 * n:
        raise SceneParseError(path, 0, f"expected {2 * n} observation values")
    if scene.truth is not None and scene.truth.size != 3:
        raise SceneParseError(path, 0, "truth must have 3 values")
    return scene


def format_scene(cameras, obs=None, truth=None) -> str:
    out = [str(len(cameras))]
    for P in cameras:
        out += [" ".join(repr(float(v)) for v in row) for row in np.asarray(P)]
    if obs is not None:
        out.append("obs")
        out += [f"{float(u)!r} {float(v)!r}" for u, v in np.asarray(obs).reshape(-1, 2)]
    if truth is not None:
        out.append("truth")
        out.append(" ".join(repr(float(v)) for v in truth))
    return "\n".join(out) + "\n"


def _read(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_scene(path, json_scene=False) -> Scene:
    text = _read(path)
    return parse_json_scene(text, path) if json_scene else parse_scene(text, path)


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_json_safe(x) for x in v]
    return v


def parse_sigma_grid(spec) -> List[float]:
    """``LO:STEP:HI`` (inclusive) or a comma-separated list."""
    if ":" in spec:
        lo, step, hi = (float(p) for p in spec.split(":"))
        if step <= 0 or hi < lo:
            raise InvalidInputError(f"bad sigma grid {spec!r}")
        count = int(math.floor((hi - lo) / step + 1e-9)) + 1
        return [round(lo + i * step, 12) for i in range(count)]
    return [float(p) for p in spec.split(",") if p.strip()]


def cmd_triangulate(args) -> int:
    scene = load_scene(args.cameras, args.json_scene)
    obs = scene.obs
    if args.obs:
        obs = parse_obs(_read(args.obs), len(scene.cameras), args.obs)
    if obs is None:
        raise InvalidInputError("no observations: pass --obs or include an 'obs' block")
    cfg = CertifyConfig(delta=args.delta, reproj_tol=args.reproj_tol,
                        coplanar_tol=args.coplanar_tol, refine=not args.no_refine,
                        solver=SolverConfig(gap_tol=args.gap_tol, feas_tol=args.feas_tol,
                                            max_iterations=args.max_iterations))
    res = triangulate(scene.cameras, obs, cfg)
    report = {"schema": JSON_SCHEMA, "n": len(scene.cameras), **res.to_dict()}
    if scene.truth is not None:
        report["recon_error"] = float(np.linalg.norm(res.X - scene.truth))
    if args.json:
        print(json.dumps(_json_safe(report)))
    else:
        print(f"status               {res.status.value}")
        print("X                    " + " ".join(f"{v:.12g}" for v in res.X))
        print(f"objective            {res.objective:.12g}")
        print(f"dual_bound           {res.dual_bound:.12g}")
        print(f"certificate_min_eig  {res.certificate_min_eig:.6g}")
        print(f"rank_gap             {res.rank_gap:.3g}")
        print(f"coplanar             {res.coplanar}")
        print(f"solver               {res.solver['status']} in {res.solver['iterations']} iterations")
        if "recon_error" in report:
            print(f"recon_error          {report['recon_error']:.6g}")
    return EXIT_OK if res.optimal else EXIT_SUBOPTIMAL


def cmd_synth(args) -> int:
    cfg = harness.ExperimentConfig(
        geometry=args.geometry, n_cameras=args.cameras,
        sigma_grid=parse_sigma_grid(args.sigma_grid), trials_per_sigma=args.trials,
        seed=args.seed, certify=CertifyConfig(delta=args.delta), timing=args.timing)
    # open outputs first so an unwritable path fails before the run
    out = open(args.out, "w", encoding="utf-8", newline="")
    summary = open(args.summary, "w", encoding="utf-8", newline="") if args.summary else None
    with out:
        records = harness.run_experiment(cfg)
        out.write(harness.records_csv(records))
        if summary:
            with summary:
                summary.write(harness.summary_csv(harness.summarize(records)))
    return EXIT_OK


def cmd_fmatrix(args) -> int:
    scene = load_scene(args.cameras, args.json_scene)
    i, j = args.pair
    n = len(scene.cameras)
    if i == j or not (1 <= i <= n and 1 <= j <= n):
        raise InvalidInputError(f"pair must be two distinct indices in 1..{n}")
    F = geometry.fundamental_matrix(scene.cameras[i - 1], scene.cameras[j - 1])
    for row in F:
        print(" ".join(f"{v:.17g}" for v in row))
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    defaults = CertifyConfig()
    p = _Parser(prog="tricert", description="Certified n-view triangulation via SDP relaxation.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("triangulate", help="triangulate one point and certify optimality")
    t.add_argument("--cameras", required=True, help="scene file")
    t.add_argument("--obs", help="observation file (n lines of 'u v')")
    t.add_argument("--json-scene", action="store_true", help="scene file is JSON")
    t.add_argument("--delta", type=float, default=defaults.delta)
    t.add_argument("--gap-tol", type=float, default=defaults.solver.gap_tol)
    t.add_argument("--feas-tol", type=float, default=defaults.solver.feas_tol)
    t.add_argument("--max-iterations", type=int, default=defaults.solver.max_iterations)
    t.add_argument("--reproj-tol", type=float, default=defaults.reproj_tol)
    t.add_argument("--coplanar-tol", type=float, default=defaults.coplanar_tol)
    t.add_argument("--no-refine", action="store_true")
    t.add_argument("--json", action="store_true", help="emit a JSON report")
    t.set_defaults(func=cmd_triangulate)

    s = sub.add_parser("synth", help="run a synthetic experiment")
    s.add_argument("--geometry", required=True, choices=[g.value for g in harness.Geometry])
    s.add_argument("--cameras", type=int, required=True)
    s.add_argument("--sigma-grid", required=True, help="LO:STEP:HI or a comma list")
    s.add_argument("--trials", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--summary")
    s.add_argument("--delta", type=float, default=defaults.delta)
    s.add_argument("--timing", action="store_true",
                   help="record wall-clock runtimes (output is then not reproducible)")
    s.set_defaults(func=cmd_synth)

    f = sub.add_parser("fmatrix", help="print the normalized fundamental matrix of a pair")
    f.add_argument("--cameras", required=True)
    f.add_argument("--pair", type=int, nargs=2, required=True, metavar=("I", "J"),
                   help="1-based camera indices")
    f.add_argument("--json-scene", action="store_true")
    f.set_defaults(func=cmd_fmatrix)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (TriangulationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
