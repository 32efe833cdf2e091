"""Time-domain fits: exponential approach to a constant, Prony modes, power laws."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import curve_fit

from .. import __version__
from ..errors import IllConditioned

MIN_POINTS = 10
MAX_MODES = 4
MIN_DYNAMIC_RANGE = 10.0
MAX_SIGN_CHANGES = 2


@dataclass
class FitResult:
    """Outcome of a fit; ``alpha`` is a decay rate, ``exponent`` a power-law index."""

    method: str
    window: tuple
    n_points: int
    u0: float | None = None
    alpha: float | None = None
    alpha_stderr: float | None = None
    omega: float | None = None
    exponent: float | None = None
    exponent_stderr: float | None = None
    amplitude: float | None = None
    residual_rms: float = 0.0
    residual_max: float = 0.0
    modes: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def as_dict(self):
        d = asdict(self)
        d["window"] = [float(w) for w in self.window]
        return d

    def to_json(self):
        return json.dumps(_clean(self.as_dict()), sort_keys=True, indent=2)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def input_hash(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype="<f8").tobytes())
    return h.hexdigest()[:16]


def _window(t, y, window):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.shape != y.shape or t.ndim != 1:
        raise ValueError("t and y must be 1-d arrays of equal length")
    lo, hi = (t[0], t[-1]) if window is None else window
    m = (t >= lo) & (t <= hi) & np.isfinite(y)
    if m.sum() < MIN_POINTS:
        raise IllConditioned(f"only {int(m.sum())} samples in window [{lo!r}, {hi!r}] (need {MIN_POINTS})")
    return t[m], y[m], (float(lo), float(hi))


def _provenance(method, window, t, y, **extra):
    out = {"method": method, "window": [float(window[0]), float(window[1])], "input_hash": input_hash(t, y),
           "version": __version__}
    out.update(extra)
    return out


def _loglinear(t, z):
    """Slope/intercept of log|z| on t with the slope's standard error."""
    L = np.log(np.abs(z))
    A = np.vstack([t, np.ones_like(t)]).T
    coef, res, *_ = np.linalg.lstsq(A, L, rcond=None)
    pred = A @ coef
    n = len(t)
    s2 = float(np.sum((L - pred) ** 2)) / max(n - 2, 1)
    var = s2 / float(np.sum((t - t.mean()) ** 2))
    return coef[0], coef[1], math.sqrt(var)


def fit_decay(t, y, window=None, constant: bool = True) -> FitResult:
    """Fit y ~ u0 + c e^{-alpha t} on ``window``.

    With ``constant`` the constant is first estimated as the median of the
    final 10% of the window, then (u0, c, alpha) are refined jointly by
    nonlinear least squares seeded from the log-linear regression of
    log|y - u0| on t. Without ``constant``, u0 = 0 and alpha is the log-linear
    slope (negative for growth). Raises :class:`IllConditioned` for flat or
    oscillation-dominated data, and for non-decaying data when ``constant``.
    """
    t, y, win = _window(t, y, window)
    n = len(t)
    if constant:
        tail = y[-max(1, n // 10):]
        u0 = float(np.median(tail))
    else:
        u0 = 0.0
    z = y - u0
    scale = float(np.max(np.abs(z)))
    if not scale > 0:
        raise IllConditioned("no dynamic range after constant subtraction (flat series)")
    # the regression uses the part of the window well above the tail level
    floor = float(np.max(np.abs(y[-max(1, n // 10):] - u0))) if constant else 0.0
    if constant and scale < MIN_DYNAMIC_RANGE * max(floor, 1e-300) and floor > 0:
        raise IllConditioned(f"dynamic range {scale / floor:.3g} below {MIN_DYNAMIC_RANGE} after constant subtraction")
    use = np.abs(z) > max(MIN_DYNAMIC_RANGE * floor, 1e-300) if constant else np.abs(z) > 0
    if use.sum() < MIN_POINTS // 2:
        raise IllConditioned("too few samples above the tail level")
    changes = int(np.count_nonzero(np.diff(np.sign(z[use]))))
    if changes > MAX_SIGN_CHANGES:
        raise IllConditioned(f"oscillation-dominated tail ({changes} sign changes); use fit_prony")
    slope, icpt, se = _loglinear(t[use], z[use])
    alpha = -slope
    amp = float(np.sign(np.median(z[use])) * math.exp(icpt))
    method = "loglinear"
    if constant:
        t0 = t[0]

        def model(tt, a, c, al):
            return a + c * np.exp(-al * (tt - t0))

        try:
            p, cov = curve_fit(model, t, y, p0=(u0, amp * math.exp(-alpha * t0), alpha), maxfev=20000,
                               xtol=1e-15, ftol=1e-15, gtol=1e-15)
            if np.all(np.isfinite(p)) and p[2] > 0:
                u0, amp, alpha = float(p[0]), float(p[1] * math.exp(p[2] * t0)), float(p[2])
                se = float(math.sqrt(cov[2, 2])) if np.all(np.isfinite(cov)) else se
                method = "median-tail + joint refit"
        except (RuntimeError, ValueError):
            method = "median-tail + loglinear"
    if not math.isfinite(alpha):
        raise IllConditioned("non-finite decay rate")
    if constant and alpha <= 0:
        raise IllConditioned(f"series does not settle (rate {alpha:.3g} <= 0)")
    pred = u0 + amp * np.exp(-alpha * t)
    resid = y - pred
    return FitResult(method=method, window=win, n_points=n, u0=u0, alpha=float(alpha), alpha_stderr=float(se),
                     amplitude=amp, residual_rms=float(np.sqrt(np.mean(resid**2))),
                     residual_max=float(np.max(np.abs(resid))),
                     provenance=_provenance(method, win, t, y, constant=constant))


def _pencil(y, k, L):
    """Matrix-pencil poles of order k."""
    N = len(y)
    Y = np.array([y[i:i + L + 1] for i in range(N - L)])
    U, s, Vh = np.linalg.svd(Y, full_matrices=False)
    V = Vh[:k].conj().T
    V1, V2 = V[:-1], V[1:]
    return np.linalg.eigvals(np.linalg.pinv(V1) @ V2), s


def fit_prony(t, y, window=None, max_modes: int = MAX_MODES, constant: bool = True, knee: float = 1e-2) -> FitResult:
    """Multi-exponential fit y ~ sum_k c_k e^{s_k t} by the matrix-pencil method.

    The number of terms (at most ``max_modes`` decaying modes, plus one
    for the constant if requested) is chosen at the residual knee: the
    smallest order after which the next order fails to reduce the residual
    by the factor ``knee``. The slowest decaying non-constant mode gives
    (alpha, omega); complex pairs count as two terms. Sampling must be
    uniform, except that a single off-grid final sample is discarded.
    """
    t, y, win = _window(t, y, window)
    dt = np.diff(t)
    tol = 1e-9 * max(abs(dt[0]), 1e-300)
    if len(t) > MIN_POINTS and np.max(np.abs(dt[:-1] - dt[0])) <= tol < abs(dt[-1] - dt[0]):
        # a final off-grid sample (e.g. a run ending between record times) is dropped
        t, y, dt = t[:-1], y[:-1], dt[:-1]
    if np.max(np.abs(dt - dt[0])) > tol:
        raise IllConditioned("Prony fitting needs uniform sampling")
    dt = float(dt[0])
    n = len(t)
    L = n // 2
    tt = t - t[0]
    cap = max_modes + (1 if constant else 0)
    fits = []
    for k in range(1, min(cap, L) + 1):
        z, _ = _pencil(y, k, L)
        s = np.log(z.astype(complex)) / dt
        Vm = np.exp(np.outer(tt, s))
        c, *_ = np.linalg.lstsq(Vm, y.astype(complex), rcond=None)
        res = float(np.linalg.norm((Vm @ c).real - y))
        fits.append((k, s, c, res))
    norm = float(np.linalg.norm(y))
    if norm == 0:
        raise IllConditioned("zero series")
    chosen = fits[-1]
    for i, f in enumerate(fits):
        if f[3] <= 1e-11 * norm:
            chosen = f
            break
        if i + 1 < len(fits) and fits[i + 1][3] > knee * f[3]:
            # next order does not buy a decisive improvement
            if i + 2 >= len(fits) or fits[i + 2][3] > knee * f[3]:
                chosen = f
                break
    k, s, c, res = chosen
    # shift amplitudes back to absolute time
    c_abs = c * np.exp(-s * t[0])
    modes = [{"rate": float(-sk.real), "omega": float(abs(sk.imag)), "amp_re": float(ck.real),
              "amp_im": float(ck.imag)} for sk, ck in zip(s, c_abs)]
    u0 = None
    dec = list(range(len(s)))
    if constant:
        i0 = int(np.argmin(np.abs(s)))
        scale = 1.0 / (t[-1] - t[0])
        if abs(s[i0]) < 0.1 * scale or abs(s[i0].real) < 1e-3 * np.max(np.abs(s.real)):
            u0 = float(c[i0].real)
            dec.remove(i0)
    if not dec:
        raise IllConditioned("no decaying mode identified")
    j = min(dec, key=lambda i: -s[i].real)
    alpha = float(-s[j].real)
    omega = float(abs(s[j].imag))
    return FitResult(method=f"prony(matrix pencil, order {k})", window=win, n_points=n, u0=u0, alpha=alpha,
                     omega=omega, amplitude=float(abs(c_abs[j])), residual_rms=res / math.sqrt(n),
                     residual_max=float(np.max(np.abs((np.exp(np.outer(tt, s)) @ c).real - y))), modes=modes,
                     provenance=_provenance("prony", win, t, y, order=k, residuals=[f[3] for f in fits]))


def fit_power(V, f, window=None, log_input: bool = False) -> FitResult:
    """Exponent p in |f| ~ C |V|^p by regression of log|f| on log|V|.

    ``window`` bounds |V| (e.g. (0, 1e-2)). With ``log_input`` the inputs are
    already log|V| and log|f| (used when |V| underflows).
    """
    V = np.asarray(V, dtype=float)
    f = np.asarray(f, dtype=float)
    if V.shape != f.shape or V.ndim != 1:
        raise ValueError("V and f must be 1-d arrays of equal length")
    if log_input:
        lV, lf = V, f
    else:
        if np.any(f == 0):
            raise IllConditioned("series touches zero; log|f| undefined")
        with np.errstate(divide="ignore"):
            lV, lf = np.log(np.abs(V)), np.log(np.abs(f))
    m = np.isfinite(lV) & np.isfinite(lf)
    if window is not None:
        lo, hi = window
        llo = -np.inf if lo <= 0 else math.log(lo)
        m &= (lV >= llo) & (lV <= math.log(hi))
        win = (float(lo), float(hi))
    else:
        win = (float(np.exp(np.min(lV[m]))) if m.any() else 0.0, float(np.exp(np.max(lV[m]))) if m.any() else 0.0)
    if m.sum() < MIN_POINTS:
        raise IllConditioned(f"only {int(m.sum())} points in the power-law window")
    x, z = lV[m], lf[m]
    d = np.diff(x)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise IllConditioned("V does not approach 0 monotonically")
    if np.ptp(x) < 1e-8:
        raise IllConditioned("no range in log|V|")
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, z, rcond=None)
    resid = z - A @ coef
    s2 = float(np.sum(resid**2)) / max(len(x) - 2, 1)
    se = math.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    return FitResult(method="power (log-log regression)", window=win, n_points=int(m.sum()),
                     exponent=float(coef[0]), exponent_stderr=se, amplitude=float(math.exp(coef[1])),
                     residual_rms=float(np.sqrt(np.mean(resid**2))), residual_max=float(np.max(np.abs(resid))),
                     provenance=_provenance("power", win, lV, lf, log_input=log_input))


def fit_late_constant(t, y, window=None) -> FitResult:
    """Late-time constant with a decay estimate.

    Tries :func:`fit_decay`; oscillatory tails fall back to :func:`fit_prony`
    with a constant term (u0 = 0 if the pencil finds no zero mode).
    """
    try:
        return fit_decay(t, y, window, constant=True)
    except IllConditioned as exc:
        try:
            res = fit_prony(t, y, window, constant=True)
        except IllConditioned as exc2:
            tw, yw, win = _window(t, y, window)
            u0 = float(np.median(yw[-max(1, len(yw) // 10):]))
            resid = yw - u0
            return FitResult(method="median-tail", window=win, n_points=len(tw), u0=u0,
                             residual_rms=float(np.sqrt(np.mean(resid**2))),
                             residual_max=float(np.max(np.abs(resid))),
                             provenance=_provenance("median-tail", win, tw, yw,
                                                    fallback_reason=f"{exc}; {exc2}"))
        if res.u0 is None:
            res.u0 = 0.0
        res.provenance["fallback_reason"] = str(exc)
        return res
