"""Monte Carlo error-rate experiments, finite-size scaling fits and result files.

Every trial draws a fresh graph from the regular ensemble, a codeword, a
channel realisation and decodes.  Per-trial random streams are derived from
``(seed, blocklength index, parameter index, trial index)``, so results do
not depend on how trials are spread over worker processes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import stats

from .channels import ChannelModel
from .codes import RegularEnsemble, sample_regular
from .decoders import bit_flip_decode, bp_decode

__all__ = [
    "OUTPUT_DIR_ENV",
    "ExperimentConfig",
    "ErrorRateRecord",
    "run_experiment",
    "binomial_halfwidth",
    "ScalingFit",
    "scaling_compare",
    "RECORD_COLUMNS",
    "emit",
    "write_records",
    "read_records",
    "write_rows",
    "read_rows",
    "default_output_dir",
    "load_config",
]

OUTPUT_DIR_ENV = "LDPC_WB_OUTPUT_DIR"
RECORD_COLUMNS = ("n", "param", "pb", "pb_ci", "pB", "pB_ci", "trials", "avg_iters")


@dataclass
class ExperimentConfig:
    l: int = 3
    k: int = 6
    ns: list[int] = field(default_factory=lambda: [1000])
    params: list[float] = field(default_factory=lambda: [0.05])
    channel: str = "bsc"
    decoder: str = "bp"
    trials: int = 1000
    max_iter: int = 200
    seed: int = 0
    codeword: str = "zero"
    min_block_errors: int | None = 100
    batch: int = 50
    workers: int = 1
    fixed_code: bool = False  # one graph per blocklength instead of a fresh draw per trial

    def validate(self) -> None:
        for n in self.ns:
            RegularEnsemble(self.l, self.k, int(n))
        for p in self.params:
            ChannelModel(self.channel, p)
        if self.decoder not in ("bp", "flip"):
            raise ValueError("decoder must be 'bp' or 'flip'")
        if self.codeword not in ("zero", "random"):
            raise ValueError("codeword policy must be 'zero' or 'random'")
        if self.codeword == "zero" and self.channel == "zc":
            raise ValueError("the all-zero codeword is not representative on the asymmetric Z channel; "
                             "use codeword = 'random'")
        if self.decoder == "flip" and self.channel not in ("bsc", "zc"):
            raise ValueError("bit flipping needs a hard-decision channel")
        if self.trials < 1 or self.batch < 1 or self.workers < 1:
            raise ValueError("trials, batch and workers must be positive")


@dataclass
class ErrorRateRecord:
    n: int
    param: float
    pb: float
    pb_ci: float
    pB: float
    pB_ci: float
    trials: int
    avg_iters: float
    bit_errors: int = 0
    block_errors: int = 0
    mean_residual_unsat: float = float("nan")
    type_mean: float = float("nan")  # mean fraction of zeros in the sent codewords
    type_concentrated: float = float("nan")  # share of codewords with |type - 1/2| <= 5/sqrt(n)


def binomial_halfwidth(successes: int, trials: int, level: float = 0.95) -> float:
    """Half-width of a confidence interval for a binomial proportion.

    Exact Clopper-Pearson below 20 successes, normal approximation above.
    """
    if trials == 0:
        return float("nan")
    p = successes / trials
    z = stats.norm.ppf(0.5 + level / 2)
    if successes < 20:
        a = 1 - level
        lo = 0.0 if successes == 0 else stats.beta.ppf(a / 2, successes, trials - successes + 1)
        hi = 1.0 if successes == trials else stats.beta.ppf(1 - a / 2, successes + 1, trials - successes)
        return float((hi - lo) / 2)
    return float(z * math.sqrt(p * (1 - p) / trials))


def _trial(cfg: ExperimentConfig, ni: int, pi: int, trial: int) -> tuple[int, int, int, int, float]:
    rng = np.random.default_rng([cfg.seed, ni, pi, trial])
    n = int(cfg.ns[ni])
    channel = ChannelModel(cfg.channel, cfg.params[pi])
    if cfg.fixed_code:
        graph = _fixed_graph(cfg.l, cfg.k, n, cfg.seed, ni)
    else:
        graph = sample_regular(RegularEnsemble(cfg.l, cfg.k, n), rng)
    if cfg.codeword == "random":
        x = graph.to_parity_check().sample_codeword(rng).astype(np.int64)
    else:
        x = np.zeros(n, dtype=np.int64)
    y = channel.sample(x, rng)
    if cfg.decoder == "bp":
        res = bp_decode(graph, channel.llr(y), max_iter=cfg.max_iter, rng=rng)
        bits, iters, resid = res.bits, res.iterations, -1
    else:
        res = bit_flip_decode(graph, y, rng)
        bits, iters, resid = res.bits, res.iterations, res.residual_unsat
    errs = int(np.count_nonzero(bits != x))
    return errs, int(errs > 0), iters, resid, float(np.mean(x == 0))


@lru_cache(maxsize=8)
def _fixed_graph(l: int, k: int, n: int, seed: int, ni: int):
    return sample_regular(RegularEnsemble(l, k, n), np.random.default_rng([seed, ni, 2**31]))


def _batch(args):
    cfg, ni, pi, trials = args
    return [_trial(cfg, ni, pi, t) for t in trials]


def run_experiment(cfg: ExperimentConfig) -> list[ErrorRateRecord]:
    """Estimate bit and block error rates on the grid ``cfg.ns x cfg.params``."""
    cfg.validate()
    records = []
    pool = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    mapper = pool.map if pool else map
    target = cfg.min_block_errors
    try:
        for ni, n in enumerate(cfg.ns):
            for pi, p in enumerate(cfg.params):
                rows, errors, start = [], 0, 0
                while start < cfg.trials and not (target and errors >= target):
                    span = min(cfg.batch * cfg.workers, cfg.trials - start)
                    jobs = [(cfg, ni, pi, list(range(s, min(s + cfg.batch, start + span))))
                            for s in range(start, start + span, cfg.batch)]
                    # rows are consumed in trial order and cut at the exact trial that
                    # reaches the error target, whatever the number of workers
                    for part in mapper(_batch, jobs):
                        for row in part:
                            if target and errors >= target:
                                break
                            rows.append(row)
                            errors += row[1]
                    start += span
                records.append(_summarise(int(n), float(p), rows, cfg))
    finally:
        if pool:
            pool.shutdown()
    return records


def _summarise(n: int, p: float, rows, cfg: ExperimentConfig) -> ErrorRateRecord:
    arr = np.array(rows, dtype=float)
    T = arr.shape[0]
    bit_err = int(arr[:, 0].sum())
    blk = int(arr[:, 1].sum())
    ber = arr[:, 0] / n
    if bit_err < 20:
        pb_ci = binomial_halfwidth(bit_err, T * n)
    else:
        # bit errors within one block are correlated, so use the spread of per-block rates
        pb_ci = float(1.96 * ber.std(ddof=1) / math.sqrt(T)) if T > 1 else float("nan")
    resid = arr[:, 3]
    types = arr[:, 4]
    return ErrorRateRecord(
        n=n, param=p, pb=float(ber.mean()), pb_ci=pb_ci, pB=blk / T, pB_ci=binomial_halfwidth(blk, T),
        trials=T, avg_iters=float(arr[:, 2].mean()), bit_errors=bit_err, block_errors=blk,
        mean_residual_unsat=float(resid.mean()) if cfg.decoder == "flip" else float("nan"),
        type_mean=float(types.mean()) if cfg.codeword == "random" else float("nan"),
        type_concentrated=(float(np.mean(np.abs(types - 0.5) <= 5.0 / math.sqrt(n)))
                           if cfg.codeword == "random" else float("nan")),
    )


# ----------------------------------------------------------------------
@dataclass
class ScalingFit:
    alpha: float
    beta: float | None
    residuals: np.ndarray
    rms: float
    n_points: int
    plain_rms: float
    improved: bool | None = None


def scaling_compare(records, eps_d: float, refine: bool = False, clip: float = 1e-9) -> ScalingFit:
    """Fit ``Phi^{-1}(P_B) = z / alpha`` with ``z = sqrt(n) (eps - eps_d)``.

    With ``refine`` the shifted form ``z = sqrt(n) (eps - eps_d + beta n^{-2/3})``
    is fitted as well; being a superset of the plain model it never has a
    larger residual.  Records with ``P_B`` equal to 0 or 1 carry no probit
    information and are skipped.
    """
    recs = [r for r in records if clip < r.pB < 1 - clip]
    ns = {r.n for r in recs}
    if len(recs) < 2 or len(ns) < 1:
        raise ValueError("need at least two records with 0 < P_B < 1")
    n = np.array([r.n for r in recs], dtype=float)
    eps = np.array([r.param for r in recs], dtype=float)
    y = stats.norm.ppf([r.pB for r in recs])
    z = np.sqrt(n) * (eps - eps_d)
    if np.allclose(z, 0):
        raise ValueError("all records sit at the threshold; the slope is undetermined")
    a = float(z @ y / (z @ z))
    plain_res = y - a * z
    plain_rms = float(np.sqrt(np.mean(plain_res ** 2)))
    if a <= 0:
        raise ValueError("block error rate does not increase with the channel parameter")
    if not refine:
        return ScalingFit(alpha=1.0 / a, beta=None, residuals=plain_res, rms=plain_rms,
                          n_points=len(recs), plain_rms=plain_rms)
    if len(ns) < 2:
        raise ValueError("the shifted fit needs at least two blocklengths")
    X = np.column_stack([z, n ** (-1.0 / 6.0)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - X @ coef
    rms = float(np.sqrt(np.mean(res ** 2)))
    return ScalingFit(alpha=1.0 / coef[0], beta=float(coef[1] / coef[0]), residuals=res, rms=rms,
                      n_points=len(recs), plain_rms=plain_rms, improved=rms <= plain_rms + 1e-15)


# ----------------------------------------------------------------------
def default_output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV, "."))


def write_rows(rows: list[dict], columns, path, fmt: str | None = None) -> Path:
    """Write dictionaries as CSV (only ``columns``) or JSON (every key)."""
    path = Path(path)
    fmt = fmt or ("json" if path.suffix == ".json" else "csv")
    if fmt not in ("csv", "json"):
        raise ValueError("format must be 'csv' or 'json'")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "json":
            path.write_text(json.dumps(rows, indent=2, default=_json_default))
        else:
            with path.open("w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore")
                w.writeheader()
                for row in rows:
                    w.writerow({c: repr(float(v)) if isinstance(v, (float, np.floating)) else v
                                 for c, v in row.items()})
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def emit(items, path, fmt: str | None = None, columns=None) -> Path:
    """Write records, trajectories or curves (dataclasses or dicts) to CSV or JSON.

    CSV columns default to :data:`RECORD_COLUMNS` for error-rate records and
    to the keys of the first item otherwise.
    """
    rows = [asdict(r) if is_dataclass(r) else dict(r) for r in items]
    if columns is None:
        if not rows or all(isinstance(r, ErrorRateRecord) for r in items):
            columns = RECORD_COLUMNS
        else:
            columns = list(rows[0])
    return write_rows(rows, columns, path, fmt)


def read_rows(path) -> list[dict]:
    path = Path(path)
    try:
        if path.suffix == ".json":
            return json.loads(path.read_text())
        with path.open(newline="") as fh:
            return [dict(r) for r in csv.DictReader(fh)]
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_records(records: list[ErrorRateRecord], path, fmt: str | None = None) -> Path:
    return write_rows([asdict(r) for r in records], RECORD_COLUMNS, path, fmt)


def read_records(path) -> list[ErrorRateRecord]:
    out = []
    types = {f.name: f.type for f in fields(ErrorRateRecord)}
    for row in read_rows(path):
        kw = {}
        for key, val in row.items():
            if key not in types:
                raise ValueError(f"unknown column {key!r}")
            kw[key] = int(float(val)) if types[key] == "int" else float(val)
        out.append(ErrorRateRecord(**kw))
    return out


def load_config(path) -> dict:
    """Read a TOML configuration file."""
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)
