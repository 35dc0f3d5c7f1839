"""Batch command-line front end.

Every command takes a JSON config file (``--config``) and/or flags; flags
override the file. Outputs are UTF-8 CSV whose first line is ``#JSON:`` plus
a metadata object (config echo, library version, seed scheme). Exit codes:
0 success, 1 numerical or component failure, 2 configuration error.
"""

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import (
    Impl, band_masks, block_source, centered_indices, oob_db, papr_ccdf, pipeline_mults, psd_welch)
from .errors import GfdmError, InvalidArgument, UnsupportedSizeError
from .filters import FilterKind, RxMode, make_prototype, make_receiver
from .modem import (
    GfdmParams, build_mod_matrix, demodulate_fd, demodulate_ref, demodulate_td, mod_matrix_cond,
    modulate_fd, modulate_ref, modulate_td)
from .precoding import Domain, domain_scheme
from .simulation import (
    STREAM_PAPR, STREAM_PSD, ChannelConfig, Constellation, frame_rng, qpsk_ser_theory, receive,
    run_ser, transmit)

ROUNDTRIP_TOL = 1e-8
SEED_SCHEME = ("numpy SeedSequence([seed, purpose, point, frame]); "
               "purpose 1=ser noise+data, 2=psd blocks, 3=papr blocks, 4=roundtrip blocks")
STREAM_ROUNDTRIP = 4


class ConfigError(GfdmError):
    def __init__(self, field_name, message):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


def _float(v):
    return float(v) if not isinstance(v, str) else float(v.strip())


def _complex(v):
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.strip().replace(" ", ""))
    return complex(v)


@dataclass
class ExperimentConfig:
    K: int = 128
    M: int = 16
    Kon: int = None
    Mon: int = None
    filter: str = "rc_time"
    rolloff: float = 0.5
    domain: str = "FT"
    rx: str = "ZF"
    constellation: str = "QPSK"
    snr: list = field(default_factory=lambda: [0.0, 4.0, 8.0, 10.0])
    frames: int = 10000
    min_errors: int = 100
    seed: int = 0
    L: int = 2
    impl: str = None
    channel: list = field(default_factory=lambda: [1.0])
    cp: int = 0
    fde: str = "ZF"
    blocks: int = 10000
    nfft: int = None
    segments: int = 200
    window: str = "hann"
    guard_bins: int = None
    out: str = None

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(unknown[0], "unknown configuration field")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["snr"] = [s if math.isfinite(s) else ("inf" if s > 0 else "-inf") for s in self.snr]
        d["channel"] = [[c.real, c.imag] for c in self.channel]
        return d

    def _int(self, name, lo=None, hi=None, optional=False):
        v = getattr(self, name)
        if v is None and optional:
            return
        try:
            iv = int(v)
            if iv != v and not isinstance(v, str):
                raise ValueError
        except (TypeError, ValueError):
            raise ConfigError(name, f"expected an integer, got {v!r}") from None
        if lo is not None and iv < lo or hi is not None and iv > hi:
            raise ConfigError(name, f"{iv} outside [{lo}, {hi}]")
        setattr(self, name, iv)

    def _choice(self, name, enum, optional=False):
        v = getattr(self, name)
        if v is None and optional:
            return
        try:
            setattr(self, name, enum(v).value)
        except ValueError:
            raise ConfigError(name, f"{v!r} is not one of {[e.value for e in enum]}") from None

    def validate(self):
        self._int("K", 1)
        self._int("M", 1)
        self._int("Kon", 1, self.K, optional=True)
        self._int("Mon", 1, self.M, optional=True)
        self._choice("filter", FilterKind)
        try:
            self.rolloff = _float(self.rolloff)
        except (TypeError, ValueError):
            raise ConfigError("rolloff", f"expected a number, got {self.rolloff!r}") from None
        if not 0.0 <= self.rolloff <= 1.0:
            raise ConfigError("rolloff", f"{self.rolloff} outside [0, 1]")
        self._choice("domain", Domain)
        if self.domain == Domain.CUSTOM.value:
            raise ConfigError("domain", "custom schemes are library-only")
        self._choice("rx", RxMode)
        self._choice("fde", RxMode)
        if self.fde == RxMode.MF.value:
            raise ConfigError("fde", "equalizer must be ZF or MMSE")
        self._choice("constellation", Constellation)
        self._choice("impl", Impl, optional=True)
        try:
            snr = self.snr if isinstance(self.snr, (list, tuple)) else [self.snr]
            self.snr = [_float(s) for s in snr]
        except (TypeError, ValueError):
            raise ConfigError("snr", f"expected numbers, got {self.snr!r}") from None
        if not self.snr or any(math.isnan(s) for s in self.snr):
            raise ConfigError("snr", "need at least one non-NaN SNR value")
        self._int("frames", 1)
        self._int("min_errors", 1)
        self._int("seed", 0, 2 ** 64 - 1)
        self._int("L", 1, self.K)
        try:
            ch = self.channel if isinstance(self.channel, (list, tuple)) else [self.channel]
            self.channel = [_complex(c) for c in ch]
        except (TypeError, ValueError, IndexError):
            raise ConfigError("channel", f"cannot parse taps {self.channel!r}") from None
        if not self.channel or not any(self.channel):
            raise ConfigError("channel", "impulse response must be non-zero")
        self._int("cp", 0, self.K * self.M - 1)
        if self.cp < len(self.channel) - 1:
            raise ConfigError("cp", f"cyclic prefix {self.cp} shorter than channel memory {len(self.channel) - 1}")
        self._int("blocks", 1000)
        self._int("nfft", self.K * self.M, optional=True)
        self._int("segments", 8)
        if self.window not in ("rect", "hann"):
            raise ConfigError("window", f"{self.window!r} is not one of ['rect', 'hann']")
        self._int("guard_bins", 0, optional=True)
        return self

    # derived objects

    @property
    def N(self):
        return self.K * self.M

    def params(self):
        kon = self.K if self.Kon is None else self.Kon
        mon = self.M if self.Mon is None else self.Mon
        # active subcarriers centred on DC; the leading subsymbols are the nulled ones
        return GfdmParams(self.K, self.M, centered_indices(kon, self.K), range(self.M - mon, self.M))

    def prototype(self):
        return make_prototype(self.filter, self.K, self.M, self.rolloff)

    def scheme(self):
        return domain_scheme(self.domain, self.K, self.M)

    def channel_config(self):
        return ChannelConfig(np.array(self.channel, dtype=complex), self.cp, float("inf"), self.seed)


def metadata(cfg, command, **extra):
    meta = {
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "seed_scheme": SEED_SCHEME,
        "config": cfg.to_dict(),
    }
    meta.update(extra)
    return meta


def render_csv(meta, header, rows, summary=None):
    buf = io.StringIO()
    buf.write("#JSON:" + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if summary is not None:
        buf.write("#SUMMARY:" + json.dumps(summary, sort_keys=True) + "\n")
    return buf.getvalue()


def read_csv(text):
    """Split an emitted file into (metadata, header, rows, summary)."""
    lines = text.split("\n")
    if not lines[0].startswith("#JSON:"):
        raise InvalidArgument("missing #JSON metadata line")
    meta = json.loads(lines[0][len("#JSON:"):])
    summary = None
    body = []
    for line in lines[1:]:
        if line.startswith("#SUMMARY:"):
            summary = json.loads(line[len("#SUMMARY:"):])
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    return meta, rows[0], rows[1:], summary


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _relerr(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def cmd_roundtrip(cfg, nblocks=4):
    p, g = cfg.params(), cfg.prototype()
    K, M = cfg.K, cfg.M
    rng = frame_rng(cfg.seed, STREAM_ROUNDTRIP, 0, 0)
    D = p.make_grid(rng.standard_normal((nblocks, p.n_active)) + 1j * rng.standard_normal((nblocks, p.n_active)))
    A = build_mod_matrix(p, g)
    x_ref = modulate_ref(D, A)
    x_fd, x_td = modulate_fd(D, g), modulate_td(D, g)
    checks = {
        "mod_fd_vs_ref": _relerr(x_fd, x_ref),
        "mod_td_vs_ref": _relerr(x_td, x_ref),
    }
    cond = mod_matrix_cond(g, K, M)
    gammas = {"MF": make_receiver(g, "MF")}
    report = {"K": K, "M": M, "cond": cond if math.isfinite(cond) else "inf"}
    if cond < 1e10:
        gammas["ZF"] = make_receiver(g, "ZF")
    else:
        report["zf_skipped"] = "modulation matrix is singular for this filter; ZF round trip not run"
    for name, gamma in gammas.items():
        d_ref = demodulate_ref(x_ref, build_mod_matrix(p, gamma.taps), (K, M))
        checks[f"demod_fd_vs_ref_{name}"] = _relerr(demodulate_fd(x_ref, gamma, K, M), d_ref)
        checks[f"demod_td_vs_ref_{name}"] = _relerr(demodulate_td(x_ref, gamma, K, M), d_ref)
    if "ZF" in gammas:
        zf = gammas["ZF"]
        checks["zf_roundtrip_td"] = float(np.max(np.abs(demodulate_td(x_td, zf, K, M) - D)))
        s = cfg.scheme()
        checks[f"zf_roundtrip_{cfg.domain}"] = float(np.max(np.abs(receive(transmit(D, g, s), zf, s) - D)))
    report["checks"] = checks
    report["tolerance"] = ROUNDTRIP_TOL
    report["pass"] = all(v < ROUNDTRIP_TOL for v in checks.values())
    return report


def cmd_complexity(cfg):
    rows = []
    impls = [Impl(cfg.impl)] if cfg.impl else list(Impl)
    n_sym = len(cfg.params().active_subcarriers) * len(cfg.params().active_subsymbols)
    for impl in impls:
        if impl is Impl.PROPOSED_TD:
            domains = [cfg.domain] if cfg.impl else [d.value for d in Domain if d is not Domain.CUSTOM]
            reps = [pipeline_mults(impl, d, cfg.K, cfg.M, cfg.L, n_sym) for d in domains]
        elif impl is Impl.REFERENCE_FD:
            reps = [pipeline_mults(impl, "FT", cfg.K, cfg.M, cfg.L, n_sym)]
        else:
            reps = [pipeline_mults(impl, None, cfg.N, 1, 1, n_sym)]
        for r in reps:
            rows.append([r.scheme, r.domain, r.K, r.M, r.L, r.core_mults, r.precoding_mults, r.total_mults,
                         _fmt(r.per_symbol)])
    header = ["scheme", "domain", "K", "M", "L", "core", "precoding", "total", "per_symbol"]
    meta = metadata(cfg, "complexity", cost_convention="n-point FFT = n*log2(n) complex multiplications",
                    reference_fd_model="N*log2(N) + L*(N + M*log2(M)), reconstructed, not published",
                    per_symbol_basis=n_sym)
    return render_csv(meta, header, rows)


def cmd_ser(cfg):
    p, g, s = cfg.params(), cfg.prototype(), cfg.scheme()
    results = run_ser(p, g, s, cfg.rx, cfg.channel_config(), cfg.snr, cfg.min_errors, cfg.frames,
                      cfg.seed, cfg.constellation, cfg.fde)
    rows = []
    for r in results:
        theory = _fmt(qpsk_ser_theory(r.snr_db)) if cfg.constellation == "QPSK" else ""
        rows.append([_fmt(r.snr_db), r.symbol_errors, r.symbols_sent, _fmt(r.ser), theory])
    meta = metadata(cfg, "ser", snr_definition="Es/N0 per data symbol; unit-energy constellation and filter; "
                    "noise added after the channel", theory="QPSK AWGN closed form (blank otherwise)")
    return render_csv(meta, ["snr_db", "errors", "sent", "ser", "theory_ser"], rows)


def _allocation_bins(p):
    k = np.asarray(p.active_subcarriers)
    k = np.where(k > p.K // 2, k - p.K, k)
    return int(k.min() * p.M - p.M // 2), int(k.max() * p.M + (p.M + 1) // 2 - 1)


def cmd_oob(cfg):
    p, g, s = cfg.params(), cfg.prototype(), cfg.scheme()
    nfft = cfg.nfft or cfg.N
    psd = psd_welch(block_source(p, g, s, cfg.constellation, cfg.seed, STREAM_PSD), nfft, cfg.segments,
                    cfg.window, block_len=cfg.N)
    lo, hi = _allocation_bins(p)
    guard = cfg.M if cfg.guard_bins is None else cfg.guard_bins
    scale = nfft / cfg.N
    inband, oob = band_masks(psd, lo * scale, hi * scale, guard * scale, nfft)
    value = oob_db(psd, inband, oob)
    rows = [[i, _fmt(f), _fmt(pw)] for i, (f, pw) in enumerate(zip(psd.bin_freqs, psd.power_db))]
    meta = metadata(cfg, "oob", band={"inband_bins": [lo, hi], "guard_bins": guard, "grid": cfg.N},
                    estimator="Welch, 50% overlap, stream of concatenated blocks")
    return render_csv(meta, ["bin", "norm_freq", "power_db"], rows, {"oob_db": value})


PAPR_THRESHOLDS = np.round(np.arange(0.0, 15.0 + 1e-9, 0.1), 10)


def cmd_papr(cfg):
    p, g, s = cfg.params(), cfg.prototype(), cfg.scheme()
    ccdf = papr_ccdf(block_source(p, g, s, cfg.constellation, cfg.seed, STREAM_PAPR), cfg.blocks, PAPR_THRESHOLDS)
    rows = [[_fmt(t), _fmt(c)] for t, c in zip(ccdf.thresholds_db, ccdf.exceed_prob)]
    try:
        level = ccdf.level_at(1e-2)
    except InvalidArgument:
        level = None
    meta = metadata(cfg, "papr")
    return render_csv(meta, ["threshold_db", "ccdf"], rows, {"papr_at_1e-2_db": level})


def build_parser():
    parser = argparse.ArgumentParser(prog="gfdm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--K", type=int)
    common.add_argument("--M", type=int)
    common.add_argument("--Kon", type=int)
    common.add_argument("--Mon", type=int)
    common.add_argument("--filter")
    common.add_argument("--rolloff", type=float)
    common.add_argument("--domain")
    common.add_argument("--rx")
    common.add_argument("--constellation")
    common.add_argument("--snr", type=lambda v: [float(x) for x in v.split(",")], help="comma-separated dB list")
    common.add_argument("--frames", type=int)
    common.add_argument("--min-errors", dest="min_errors", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--L", type=int)
    common.add_argument("--impl")
    common.add_argument("--channel", type=lambda v: v.split(","), help="comma-separated complex taps")
    common.add_argument("--cp", type=int)
    common.add_argument("--fde")
    common.add_argument("--blocks", type=int)
    common.add_argument("--nfft", type=int)
    common.add_argument("--segments", type=int)
    common.add_argument("--window")
    common.add_argument("--guard-bins", dest="guard_bins", type=int)
    common.add_argument("--out")
    for name in ("roundtrip", "complexity", "ser", "oob", "papr"):
        sub.add_parser(name, parents=[common])
    return parser


def load_config(ns):
    values = {}
    args = vars(ns).copy()
    args.pop("command")
    path = args.pop("config", None)
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError("config", str(exc)) from None
    values.update(args)
    return ExperimentConfig.from_dict(values)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    ns = build_parser().parse_args(argv)
    try:
        cfg = load_config(ns)
    except (ConfigError, InvalidArgument) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if ns.command == "roundtrip":
            report = cmd_roundtrip(cfg)
            report["config"] = cfg.to_dict()
            _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", cfg.out)
            return 0 if report["pass"] else 1
        text = {"complexity": cmd_complexity, "ser": cmd_ser, "oob": cmd_oob, "papr": cmd_papr}[ns.command](cfg)
    except UnsupportedSizeError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (GfdmError, ValueError, ZeroDivisionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    _emit(text, cfg.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
