"""INI-style experiment configuration with documented defaults."""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .mcmc import SamplerConfig
from .synthetic import SyntheticConfig

TEMPLATE = """\
# Retrieval experiment configuration.  Blank values mean "use the default".

[problem]
# synthetic spectral setup (cross sections are regenerated from these)
n_wavelengths = 200
n_layers = 50
n_lines = 10
setup_seed = 1
# noise standard deviation relative to the peak continuum signal
noise_rel = 0.001
# ensemble file (one profile per row); blank = bundled synthetic ensemble
ensemble =
# relative jitter added to the empirical prior covariance
jitter = 1e-6
# measured spectrum (wavelength,intensity CSV); blank = <out>/simulate/noisy_spectrum.csv
spectrum =
# simulate: skip the noise draw
noise_free = false

[method]
# one of: full, lis, prired
method = lis
# subspace rank; leave blank and set threshold to pick LIS rank by singular values >= threshold
rank = 4
threshold =
# Laplace draws used to average the whitened Jacobian
laplace_samples = 1000

[sampler]
chain_length = 100000
# blank = 20% of chain_length
burn_in =
adapt_start = 1000
adapt_interval = 100
regularization_eps = 1e-10
# keep every k-th sample in exported chain files
export_thin = 1

[compare]
ranks = 1,2,3,4,5,6,7,8
methods = lis,prired
# directory of a method=full retrieval; blank = <out>/retrieve-full
reference =
bins = 50

[output]
directory = out
seed = 0
"""


@dataclass
class ExperimentConfig:
    synthetic: SyntheticConfig = field(default_factory=SyntheticConfig)
    ensemble: Path | None = None
    spectrum: Path | None = None
    noise_free: bool = False
    method: str = "lis"
    rank: int | None = 4
    threshold: float | None = None
    laplace_samples: int = 1000
    chain_length: int = 100_000
    burn_in: int | None = None
    adapt_start: int = 1000
    adapt_interval: int = 100
    regularization_eps: float = 1e-10
    export_thin: int = 1
    ranks: tuple = (1, 2, 3, 4, 5, 6, 7, 8)
    compare_methods: tuple = ("lis", "prired")
    reference: Path | None = None
    bins: int = 50
    out: Path = Path("out")
    seed: int = 0

    def sampler(self) -> SamplerConfig:
        return SamplerConfig(
            chain_length=self.chain_length,
            burn_in=self.burn_in,
            adapt_start=self.adapt_start,
            adapt_interval=self.adapt_interval,
            regularization_eps=self.regularization_eps,
            seed=self.seed,
        )

    def validate(self) -> None:
        from .experiment import METHODS

        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.rank is not None and self.threshold is not None:
            raise ConfigError("set either rank or threshold, not both")
        if self.method == "prired" and self.rank is None:
            raise ConfigError("prior reduction needs a rank")
        if self.rank is not None and self.rank < 1:
            raise ConfigError("rank must be >= 1")
        if self.laplace_samples < 1 or self.export_thin < 1 or self.bins < 1:
            raise ConfigError("laplace_samples, export_thin and bins must be >= 1")
        for m in self.compare_methods:
            if m not in ("lis", "prired"):
                raise ConfigError(f"compare methods must be lis/prired, got {m!r}")
        for p in (self.ensemble,):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"file not found: {p}")
        self.sampler()

    def canonical(self) -> str:
        """Stable text form used for the config hash."""
        parts = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, SyntheticConfig):
                v = sorted(v.to_dict().items())
            parts.append(f"{f.name}={v!s}")
        return "\n".join(parts)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _get(section, key, conv, default):
    raw = section.get(key, fallback="")
    raw = raw.strip() if raw is not None else ""
    if raw == "":
        return default
    try:
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key}: cannot parse {raw!r}") from exc


def _bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def _int_list(raw: str) -> tuple:
    out = []
    for tok in raw.replace(" ", "").split(","):
        if "-" in tok:
            a, b = tok.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif tok:
            out.append(int(tok))
    return tuple(out)


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    for name in ("problem", "method", "sampler", "compare", "output"):
        if not parser.has_section(name):
            parser.add_section(name)
    base = base_dir or Path(".")

    def path(raw):
        p = Path(raw)
        return p if p.is_absolute() else base / p

    pr, me, sa, co, ou = (parser[s] for s in ("problem", "method", "sampler", "compare", "output"))
    defaults = SyntheticConfig()
    synthetic = SyntheticConfig(
        n_wavelengths=_get(pr, "n_wavelengths", int, defaults.n_wavelengths),
        n_layers=_get(pr, "n_layers", int, defaults.n_layers),
        n_lines=_get(pr, "n_lines", int, defaults.n_lines),
        seed=_get(pr, "setup_seed", int, defaults.seed),
        noise_rel=_get(pr, "noise_rel", float, defaults.noise_rel),
        jitter=_get(pr, "jitter", float, defaults.jitter),
    )
    cfg = ExperimentConfig(
        synthetic=synthetic,
        ensemble=_get(pr, "ensemble", path, None),
        spectrum=_get(pr, "spectrum", path, None),
        noise_free=_get(pr, "noise_free", _bool, False),
        method=_get(me, "method", str, "lis"),
        rank=_get(me, "rank", int, None),
        threshold=_get(me, "threshold", float, None),
        laplace_samples=_get(me, "laplace_samples", int, 1000),
        chain_length=_get(sa, "chain_length", int, 100_000),
        burn_in=_get(sa, "burn_in", int, None),
        adapt_start=_get(sa, "adapt_start", int, 1000),
        adapt_interval=_get(sa, "adapt_interval", int, 100),
        regularization_eps=_get(sa, "regularization_eps", float, 1e-10),
        export_thin=_get(sa, "export_thin", int, 1),
        ranks=_get(co, "ranks", _int_list, (1, 2, 3, 4, 5, 6, 7, 8)),
        compare_methods=_get(co, "methods", lambda s: tuple(t.strip() for t in s.split(",") if t.strip()),
                             ("lis", "prired")),
        reference=_get(co, "reference", path, None),
        bins=_get(co, "bins", int, 50),
        out=_get(ou, "directory", path, base / "out"),
        seed=_get(ou, "seed", int, 0),
    )
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    return parse_config(text, path.parent)
