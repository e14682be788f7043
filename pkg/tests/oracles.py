"""Brute-force reference implementations used as test oracles.

Plain Python loops over lists, written from the definitions and sharing no
code with the package.
"""
import math

from scipy import integrate, optimize, stats


def o_mean(xs):
    return sum(xs) / len(xs)


def o_median(xs):
    s = sorted(xs)
    n = len(s)
    return s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2


def o_mae(y, x):
    return o_mean([abs(a - b) for a, b in zip(y, x)])


def o_rmse(y, x):
    return math.sqrt(o_mean([(a - b) ** 2 for a, b in zip(y, x)]))


def o_apes(y, x):
    eps = min(abs(a) for a in y if a != 0)
    return [abs(a - b) / (abs(a) if a != 0 else eps) for a, b in zip(y, x)]


def o_sapes(y, x):
    out = []
    for a, b in zip(y, x):
        out.append(0.0 if a + b == 0 else 2 * abs(a - b) / abs(a + b))
    return out


def o_mape(y, x):
    return o_mean(o_apes(y, x))


def o_smape(y, x):
    return o_mean(o_sapes(y, x))


def o_mdape(y, x):
    return o_median(o_apes(y, x))


def o_mdsape(y, x):
    return o_median(o_sapes(y, x))


def o_rw(y):
    return [y[0]] + list(y[:-1])


def o_mare(y, x):
    rw = o_rw(y)
    terms = [abs(a - b) / abs(a - r) for a, b, r in zip(y, x, rw) if a != r]
    return o_mean(terms)


def o_relmae(y, x):
    rw = o_rw(y)
    return sum(abs(a - b) for a, b in zip(y, x)) / sum(abs(a - r) for a, r in zip(y, rw))


def o_pb(y, x):
    rw = o_rw(y)
    return o_mean([1.0 if abs(a - b) <= abs(a - r) else 0.0 for a, b, r in zip(y, x, rw)])


def o_mase(y, x):
    scale = o_mean([abs(y[i] - y[i - 1]) for i in range(1, len(y))])
    return o_mae(y, x) / scale


def o_maape(y, x):
    return o_mean([math.atan2(abs(a - b), abs(a)) for a, b in zip(y, x)])


def o_nmse(y, x):
    m = o_mean(y)
    var = sum((a - m) ** 2 for a in y) / (len(y) - 1)
    return o_mean([(a - b) ** 2 for a, b in zip(y, x)]) / var


def o_competition_ranks(values, lower_is_better=True):
    out = []
    for v in values:
        better = 0
        for w in values:
            if (w < v) if lower_is_better else (w > v):
                better += 1
        out.append(better + 1)
    return out


def o_peak(values, first_week=1):
    best, week = values[0], first_week
    for i, v in enumerate(values):
        if v > best:
            best, week = v, first_week + i
    return best, week


def o_takeoff(values, dt=2, thr=150.0, first_week=1):
    for i in range(len(values) - dt):
        slope = (values[i + dt] - values[i]) / dt
        if slope >= thr:
            return slope, first_week + i
    return None


def o_intensity(values, thr, first_week=1):
    weeks = [first_week + i for i, v in enumerate(values) if v > thr]
    if not weeks:
        return None
    longest = run = 0
    for v in values:
        run = run + 1 if v > thr else 0
        longest = max(longest, run)
    return len(weeks), weeks[0], longest, weeks[-1]


# --- densities --------------------------------------------------------------


def quad_bhattacharyya(mp, sp, mq, sq):
    """-ln of the integral of sqrt(p q), integrated in log space.

    The integrand is rescaled by its numerically located maximum so far
    apart, narrow densities do not underflow.
    """
    g = lambda t: 0.5 * (stats.norm.logpdf(t, mp, sp) + stats.norm.logpdf(t, mq, sq))
    lo = min(mp - 12 * sp, mq - 12 * sq)
    hi = max(mp + 12 * sp, mq + 12 * sq)
    best = optimize.minimize_scalar(lambda t: -g(t), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    t0, g0 = best.x, g(best.x)
    width = 1.0 / math.sqrt(0.5 / sp**2 + 0.5 / sq**2)
    pts = sorted({t0, t0 - width, t0 + width})
    val, _ = integrate.quad(lambda t: math.exp(g(t) - g0), lo, hi, limit=500, points=pts, epsabs=0, epsrel=1e-11)
    return -(g0 + math.log(val))


def quad_hellinger(mp, sp, mq, sq):
    """sqrt of the integral of (sqrt p - sqrt q)^2."""
    f = lambda t: (math.sqrt(stats.norm.pdf(t, mp, sp)) - math.sqrt(stats.norm.pdf(t, mq, sq))) ** 2
    lo = min(mp - 12 * sp, mq - 12 * sq)
    hi = max(mp + 12 * sp, mq + 12 * sq)
    val, _ = integrate.quad(f, lo, hi, limit=500, points=sorted({mp, mq}), epsabs=1e-12)
    return math.sqrt(val)


def folded_normal_mean(mu, sigma):
    """E|Z| for Z ~ N(mu, sigma^2)."""
    return sigma * math.sqrt(2 / math.pi) * math.exp(-mu * mu / (2 * sigma * sigma)) + mu * (
        1 - 2 * stats.norm.cdf(-mu / sigma)
    )


def folded_normal_var(mu, sigma):
    return mu * mu + sigma * sigma - folded_normal_mean(mu, sigma) ** 2
