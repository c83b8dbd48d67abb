"""Driven Chua circuit kernel: piecewise-linear diode, RK4 integration,
bifurcation scans, spectra, and input-noise modelling.

State ordering throughout is (i_l, v_c2, v_c1): inductor current and the
two capacitor voltages. Two voltage taps are recorded: the diode-side
capacitor voltage ("v_cd") and the inductor terminal voltage ("v_l").
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IntegrationError

TAP_DIODE = "v_cd"
TAP_INDUCTOR = "v_l"

# Kennedy-style component values: 18 mH radial inductor (17 ohm series
# resistance), 10 nF / 100 nF capacitors, dual op-amp negative-impedance
# diode built from 220/220/2.2k and 22k/22k/3.3k resistor triples.
NIC_BRANCHES = ((220.0, 220.0, 2200.0), (22000.0, 22000.0, 3300.0))
DEFAULT_ESAT = 8.3  # op-amp saturation for a +/-9 V supply


@dataclass(frozen=True)
class DiodePwl:
    """Odd, continuous 5-segment piecewise-linear resistor.

    Slopes are conductances in siemens; breakpoints in volts. The two inner
    slopes are negative (locally active), the outer one positive.
    """

    g_inner: float
    g_mid: float
    g_outer: float
    bp_inner: float
    bp_outer: float

    def __post_init__(self):
        if not (self.g_inner < self.g_mid < 0.0 < self.g_outer):
            raise ConfigurationError("diode", "slopes must satisfy g_inner < g_mid < 0 < g_outer")
        if not (0.0 < self.bp_inner < self.bp_outer):
            raise ConfigurationError("diode", "breakpoints must satisfy 0 < bp_inner < bp_outer")

    @classmethod
    def from_nic_branches(cls, branches=NIC_BRANCHES, esat: float = DEFAULT_ESAT) -> "DiodePwl":
        """Derive the PWL coefficients from two op-amp NIC resistor triples.

        Each branch (r1, r2, r3) contributes conductance -r2/(r1*r3) while the
        op amp is linear and +1/r1 once it saturates; saturation onset is at
        esat*r3/(r2 + r3) volts.
        """
        if len(branches) != 2:
            raise ConfigurationError("diode", "exactly two NIC branches define a 5-segment diode")
        params = sorted(
            ((esat * r3 / (r2 + r3), -r2 / (r1 * r3), 1.0 / r1) for r1, r2, r3 in branches),
        )
        (bp_in, g_in, s_in), (bp_out, g_out, s_out) = params
        return cls(
            g_inner=g_in + g_out,
            g_mid=g_out + s_in,
            g_outer=s_in + s_out,
            bp_inner=bp_in,
            bp_outer=bp_out,
        )


def diode_current(v: float, d: DiodePwl) -> float:
    """Current through the PWL diode at voltage ``v`` (exact segment arithmetic)."""
    a = abs(v)
    if a <= d.bp_inner:
        i = d.g_inner * a
    elif a <= d.bp_outer:
        i = d.g_inner * d.bp_inner + d.g_mid * (a - d.bp_inner)
    else:
        i = (
            d.g_inner * d.bp_inner
            + d.g_mid * (d.bp_outer - d.bp_inner)
            + d.g_outer * (a - d.bp_outer)
        )
    return i if v >= 0.0 else -i


@dataclass(frozen=True)
class ChuaParams:
    """Circuit constants: series resistor, capacitors, inductor and diode."""

    r_variable: float  # ohms
    c1: float  # farads, diode-side capacitor
    c2: float  # farads
    l: float  # henries
    r_series: float  # ohms, inductor series resistance
    diode: DiodePwl = field(default_factory=DiodePwl.from_nic_branches)

    def __post_init__(self):
        for name in ("r_variable", "c1", "c2", "l"):
            if getattr(self, name) <= 0.0:
                raise ConfigurationError(f"circuit.{name}", "must be strictly positive")
        if self.r_series < 0.0:
            raise ConfigurationError("circuit.r_series", "must be non-negative")


def kennedy_circuit(r_variable: float = 1920.0) -> ChuaParams:
    """Default circuit built from the stock component values."""
    return ChuaParams(r_variable=r_variable, c1=10e-9, c2=100e-9, l=18e-3, r_series=17.0)


@dataclass(frozen=True)
class CircuitState:
    """Dynamical state (inductor current, outer and diode-side capacitor voltages)."""

    i_l: float = 0.0
    v_c2: float = 0.0
    v_c1: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(x) for x in (self.i_l, self.v_c2, self.v_c1)):
            raise ConfigurationError("state", "all components must be finite")


#: Conventional off-equilibrium starting point; the exact origin is a fixed point.
DEFAULT_INITIAL_STATE = CircuitState(i_l=0.0, v_c2=0.0, v_c1=0.1)


@dataclass(frozen=True)
class DriveSignal:
    """Sampled input voltage applied in series with the inductor."""

    samples: np.ndarray  # volts
    sample_rate: float  # Hz

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))
        if self.sample_rate <= 0.0:
            raise ConfigurationError("drive.sample_rate", "must be positive")
        if self.samples.size == 0:
            raise ConfigurationError("drive.samples", "must be nonempty")

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate


def sine_drive(amplitude: float, frequency: float, duration: float, sample_rate: float) -> DriveSignal:
    """Plain sinusoidal drive, sampled at ``sample_rate``."""
    n = max(1, int(round(duration * sample_rate)))
    t = np.arange(n) / sample_rate
    return DriveSignal(amplitude * np.sin(2.0 * math.pi * frequency * t), sample_rate)


@dataclass(frozen=True)
class Trace:
    """Uniformly sampled multi-tap voltage record."""

    dt: float  # seconds
    tap_names: tuple
    channels: np.ndarray  # shape (n_taps, n_samples), volts

    def __post_init__(self):
        object.__setattr__(self, "channels", np.asarray(self.channels, dtype=float))
        if self.dt <= 0.0:
            raise ConfigurationError("trace.dt", "must be positive")
        if self.channels.ndim != 2 or self.channels.shape[0] != len(self.tap_names):
            raise ConfigurationError("trace.channels", "one row per tap required")

    @property
    def n_samples(self) -> int:
        return self.channels.shape[1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt

    def channel(self, tap: str) -> np.ndarray:
        return self.channels[self.tap_names.index(tap)]


@dataclass(frozen=True)
class NoiseSpec:
    """White-noise description of a signal source."""

    voltage_density: float  # V/sqrt(Hz)
    current_density: float  # A/sqrt(Hz)
    bandwidth: float  # Hz
    seed: int = 0

    def __post_init__(self):
        if self.voltage_density < 0.0 or self.current_density < 0.0:
            raise ConfigurationError("noise", "densities must be non-negative")
        if self.bandwidth <= 0.0:
            raise ConfigurationError("noise.bandwidth", "must be positive")


def derivatives(state: CircuitState, p: ChuaParams, v_in: float = 0.0) -> tuple:
    """Per-second rates of (i_l, v_c2, v_c1).

    The drive voltage and the inductor series resistance enter only the
    inductor-current equation; with both zero the rates reduce to the
    undriven three-state circuit equations.
    """
    il, v2, v1 = state.i_l, state.v_c2, state.v_c1
    d_il = (-v2 - p.r_series * il - v_in) / p.l
    d_v2 = il / p.c2 - (v2 - v1) / (p.r_variable * p.c2)
    d_v1 = (v2 - v1) / (p.r_variable * p.c1) - diode_current(v1, p.diode) / p.c1
    return (d_il, d_v2, d_v1)


def _drive_lookup(drive: DriveSignal | None, dt: float, n_steps: int) -> np.ndarray:
    """Zero-order-hold the drive onto the integration grid.

    dt must divide the drive sample interval (or be an exact multiple of it);
    past the end of the drive the last sample is held.
    """
    if drive is None:
        return np.zeros(n_steps + 1)
    ratio = drive.sample_rate * dt  # drive samples per integration step
    if ratio >= 1.0 - 1e-9:
        m = round(ratio)
        if abs(ratio - m) > 1e-9:
            raise ConfigurationError("dt", "must be an integer multiple of the drive sample interval")
        idx = np.minimum(np.arange(n_steps + 1) * m, drive.samples.size - 1)
    else:
        m = round(1.0 / ratio)
        if abs(1.0 / ratio - m) > 1e-6:
            raise ConfigurationError("dt", "must divide the drive sample interval")
        idx = np.minimum(np.arange(n_steps + 1) // m, drive.samples.size - 1)
    return drive.samples[idx]


def integrate(
    p: ChuaParams,
    init: CircuitState,
    drive: DriveSignal | None,
    t_end: float,
    dt: float = 1e-8,
) -> Trace:
    """Fixed-step classical RK4 integration of the driven circuit.

    Returns a two-tap trace sampled at every step boundary (n_steps + 1
    samples including the initial state). Tap "v_cd" is the diode-side
    capacitor voltage; tap "v_l" is v_c2 - r_series*i_l - v_in, the voltage
    seen at the inductor terminal. Deterministic: identical inputs give
    bit-identical traces.

    Raises IntegrationError (with the failing step index) if the state
    becomes non-finite.
    """
    if dt <= 0.0:
        raise ConfigurationError("dt", "must be positive")
    n_steps = int(round(t_end / dt))
    # plain Python floats keep the scalar RK4 loop fast
    vin = _drive_lookup(drive, dt, n_steps).tolist()

    diode = p.diode
    gi, gm, go = diode.g_inner, diode.g_mid, diode.g_outer
    bi, bo = diode.bp_inner, diode.bp_outer
    i_bi = gi * bi
    i_bo = i_bi + gm * (bo - bi)
    inv_l = 1.0 / p.l
    inv_c2 = 1.0 / p.c2
    inv_c1 = 1.0 / p.c1
    inv_rc2 = 1.0 / (p.r_variable * p.c2)
    inv_rc1 = 1.0 / (p.r_variable * p.c1)
    rs = p.r_series
    h = dt

    def rates(il, v2, v1, u):
        a = v1 if v1 >= 0.0 else -v1
        if a <= bi:
            idio = gi * a
        elif a <= bo:
            idio = i_bi + gm * (a - bi)
        else:
            idio = i_bo + go * (a - bo)
        if v1 < 0.0:
            idio = -idio
        return (
            (-v2 - rs * il - u) * inv_l,
            il * inv_c2 - (v2 - v1) * inv_rc2,
            (v2 - v1) * inv_rc1 - idio * inv_c1,
        )

    il, v2, v1 = init.i_l, init.v_c2, init.v_c1
    v_cd = np.empty(n_steps + 1)
    v_l = np.empty(n_steps + 1)
    for i in range(n_steps):
        u = vin[i]
        v_cd[i] = v1
        v_l[i] = v2 - rs * il - u
        k1 = rates(il, v2, v1, u)
        k2 = rates(il + 0.5 * h * k1[0], v2 + 0.5 * h * k1[1], v1 + 0.5 * h * k1[2], u)
        k3 = rates(il + 0.5 * h * k2[0], v2 + 0.5 * h * k2[1], v1 + 0.5 * h * k2[2], u)
        k4 = rates(il + h * k3[0], v2 + h * k3[1], v1 + h * k3[2], u)
        il += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        v2 += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        v1 += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        if not (math.isfinite(il) and math.isfinite(v2) and math.isfinite(v1)):
            raise IntegrationError(i)
    v_cd[n_steps] = v1
    v_l[n_steps] = v2 - rs * il - vin[n_steps]
    return Trace(dt=dt, tap_names=(TAP_DIODE, TAP_INDUCTOR), channels=np.vstack([v_cd, v_l]))


def steady_state_extrema(
    samples: np.ndarray, transient_fraction: float = 0.5
) -> np.ndarray:
    """Strict 3-sample local maxima and minima after discarding the transient.

    If the steady segment has no strict extrema (constant or monotone decay
    below float resolution), the segment min and max stand in for them.
    """
    tail = np.asarray(samples, dtype=float)[int(len(samples) * transient_fraction):]
    if tail.size < 3:
        return np.array([tail.min(), tail.max()]) if tail.size else np.empty(0)
    a, b, c = tail[:-2], tail[1:-1], tail[2:]
    mask = ((b > a) & (b > c)) | ((b < a) & (b < c))
    ext = b[mask]
    if ext.size == 0:
        ext = np.array([tail.min(), tail.max()])
    return ext


@dataclass(frozen=True)
class BifurcationPoint:
    """Extrema of one tap at one value of the swept parameter."""

    value: float
    extrema: np.ndarray
    error: str | None = None


SWEEPABLE = ("r_variable", "c1", "drive_amplitude")


def _scan_point(args) -> BifurcationPoint:
    vary, value, p, drive_freq, drive_amplitude, tap, t_end, dt, transient_fraction = args
    try:
        if vary == "drive_amplitude":
            amplitude = value
        else:
            amplitude = drive_amplitude
            p = ChuaParams(
                r_variable=value if vary == "r_variable" else p.r_variable,
                c1=value if vary == "c1" else p.c1,
                c2=p.c2,
                l=p.l,
                r_series=p.r_series,
                diode=p.diode,
            )
        drive = None
        if amplitude and drive_freq:
            drive = sine_drive(amplitude, drive_freq, t_end, 1.0 / dt)
        trace = integrate(p, DEFAULT_INITIAL_STATE, drive, t_end, dt)
        ext = steady_state_extrema(trace.channel(tap), transient_fraction)
        return BifurcationPoint(value=value, extrema=ext)
    except IntegrationError as exc:
        return BifurcationPoint(value=value, extrema=np.empty(0), error=str(exc))


def bifurcation_scan(
    vary: str,
    values,
    fixed: ChuaParams,
    tap: str = TAP_DIODE,
    drive_frequency: float = 0.0,
    drive_amplitude: float = 0.0,
    t_end: float | None = None,
    dt: float = 1e-8,
    transient_fraction: float = 0.5,
    jobs: int = 1,
) -> list:
    """Sweep one parameter and collect steady-state extrema of the chosen tap.

    ``vary`` is one of r_variable, c1, drive_amplitude. The horizon defaults
    to 40 ms undriven and 20 drive periods when driven. Failed points are
    flagged in place and the scan continues. Points may be evaluated in
    parallel; results are always returned in parameter order.
    """
    if vary not in SWEEPABLE:
        raise ConfigurationError("vary", f"must be one of {SWEEPABLE}")
    values = [float(v) for v in values]
    if len(values) < 2:
        raise ConfigurationError("values", "at least 2 scan points required")
    diffs = np.diff(values)
    if not (np.all(diffs > 0) or np.all(diffs < 0)):
        raise ConfigurationError("values", "scan range must be monotone")
    if vary == "drive_amplitude" and drive_frequency <= 0.0:
        raise ConfigurationError("drive_frequency", "required for a drive-amplitude scan")
    if t_end is None:
        t_end = 20.0 / drive_frequency if drive_frequency > 0.0 else 40e-3

    tasks = [
        (vary, v, fixed, drive_frequency, drive_amplitude, tap, t_end, dt, transient_fraction)
        for v in values
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_scan_point, tasks))
    return [_scan_point(t) for t in tasks]


def power_spectrum(samples: np.ndarray, dt: float) -> tuple:
    """One-sided DFT magnitude of the mean-removed signal.

    Returns (frequencies in Hz, |X_k|) with bin spacing 1/(n*dt). Magnitudes
    are raw DFT coefficients, so sum((x - mean)**2) equals
    sum(w_k * |X_k|**2) / n with w_k = 2 everywhere except DC and (for even
    n) the Nyquist bin.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ConfigurationError("samples", "need at least 2 samples")
    x = x - x.mean()
    mags = np.abs(np.fft.rfft(x))
    freqs = np.fft.rfftfreq(x.size, d=dt)
    return freqs, mags


def inject_noise(signal: DriveSignal, spec: NoiseSpec) -> DriveSignal:
    """Add white Gaussian voltage noise with RMS = voltage_density*sqrt(bandwidth)."""
    rms = spec.voltage_density * math.sqrt(spec.bandwidth)
    if rms == 0.0:
        return DriveSignal(signal.samples.copy(), signal.sample_rate)
    rng = np.random.default_rng([spec.seed, 0x6E6F6973])
    noisy = signal.samples + rng.normal(0.0, rms, signal.samples.size)
    return DriveSignal(noisy, signal.sample_rate)


def snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    """Signal-to-noise ratio 10*log10(signal power / noise power) in dB.

    Returns math.inf when the two signals are identical (zero noise power).
    """
    clean = np.asarray(clean, dtype=float)
    noisy = np.asarray(noisy, dtype=float)
    if clean.shape != noisy.shape:
        raise ConfigurationError("snr", "signals must have equal length")
    noise_power = float(np.sum((noisy - clean) ** 2))
    if noise_power == 0.0:
        return math.inf
    signal_power = float(np.sum(clean**2))
    return 10.0 * math.log10(signal_power / noise_power)


def trace_to_csv(trace: Trace, path, config_digest: str | None = None) -> None:
    """Write a trace as CSV (`t,<tap1>,<tap2>`).

    Times carry 13 significant digits; voltages use full round-trip
    precision.
    """
    with open(path, "w") as fh:
        if config_digest:
            fh.write(f"# config_digest={config_digest}\n")
        fh.write("t," + ",".join(trace.tap_names) + "\n")
        times = trace.times
        cols = trace.channels
        for i in range(trace.n_samples):
            fh.write(f"{times[i]:.12e},"
                     + ",".join(repr(float(c)) for c in cols[:, i]) + "\n")


def bifurcation_to_csv(points: list, path, config_digest: str | None = None) -> None:
    """Write scan results as `param,extremum_value` rows (failed points skipped)."""
    with open(path, "w") as fh:
        if config_digest:
            fh.write(f"# config_digest={config_digest}\n")
        fh.write("param,extremum_value\n")
        for pt in points:
            for e in pt.extrema:
                fh.write(f"{repr(pt.value)},{repr(float(e))}\n")


def spectrum_to_csv(freqs: np.ndarray, mags: np.ndarray, path, config_digest: str | None = None) -> None:
    """Write a spectrum as `freq_hz,magnitude` rows."""
    with open(path, "w") as fh:
        if config_digest:
            fh.write(f"# config_digest={config_digest}\n")
        fh.write("freq_hz,magnitude\n")
        for f, m in zip(freqs, mags):
            fh.write(f"{repr(float(f))},{repr(float(m))}\n")
