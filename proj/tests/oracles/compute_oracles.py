"""Independent oracle computations for golden values frozen into the C++ tests.

Every number here is computed with scipy/mpmath closed forms, brute-force
grids or Riemann sums, never with the library under test.
"""
import numpy as np
import mpmath as mp
from scipy import stats, special, integrate, optimize

mp.mp.dps = 40


def show(name, value):
    print(f"{name:55s} {value!r}")


# posterior: wide-prior normal-normal conjugate density at the mean
prec = 2.0 + 1.0 / 100.0**2
show("location N(1,3) tnorm(2,100) density(2)", np.sqrt(prec / (2 * np.pi)))

# interval probability Beta(51,51) on (0.45, 0.55)
show("I(0.55;51,51)-I(0.45;51,51)", float(mp.betainc(51, 51, 0.45, 0.55, regularized=True)))

# double exponential posterior median, data (0,0,10), tnorm(0,100) prior, dense grid
a = np.linspace(-40, 50, 9_000_001)
logp = -(np.abs(a) * 2 + np.abs(10 - a)) - 0.5 * (a / 100.0) ** 2
p = np.exp(logp - logp.max())
c = np.cumsum(p)
c /= c[-1]
show("DE median (grid)", a[np.searchsorted(c, 0.5)])
# the same median by adaptive quadrature and root finding
_x = np.array([0.0, 0.0, 10.0])
_f = lambda t: np.exp(-np.abs(_x - t).sum() + 10) * stats.norm(0, 100).pdf(t)
_z = integrate.quad(_f, -60, 60, points=[0, 10], limit=500, epsabs=0, epsrel=1e-13)[0]
_F = lambda m: integrate.quad(_f, -60, m, points=[0] if m > 0 else None, limit=500, epsabs=0, epsrel=1e-13)[0] / _z - 0.5
show("DE median (quad)", optimize.brentq(_F, 0, 5, xtol=1e-14))
# grid maximization of sum -|x-a|
g = np.linspace(-5, 15, 2_000_001)
ll = -(np.abs(g) * 2 + np.abs(10 - g))
show("DE mle (grid argmax)", g[np.argmax(ll)])

# rescaled g_n(0) for n=100,s=50
show("Beta(51,51).pdf(0.5)/20", stats.beta(51, 51).pdf(0.5) / 20)

# expansion remainder n=100,s=50,x=1
th, al = 0.5, 20.0
ell = lambda t: 50 * mp.log(t) + 50 * mp.log(1 - t)
show("R_100(1)", float(ell(th + 1 / al) - ell(th) + 0.5))

# laplace tail
show("laplace_tail n=1000 omega=0.1", float(mp.erf(0.1 * mp.sqrt(1000 / 0.25) / mp.sqrt(2))))
show("laplace_tail n=100 omega=0.05", float(mp.erf(1 / mp.sqrt(2))))

# second law gap n=1000 eps=0.1: Beta(501,501) mass outside (0.4,0.6)
show("gap n=1000 eps=0.1", float(1 - mp.betainc(501, 501, 0.4, 0.6, regularized=True)))

# Stirling normalizer gap, 3 correction terms
def stirling_lgamma(z):
    z = mp.mpf(z)
    return (z - 0.5) * mp.log(z) - z + 0.5 * mp.log(2 * mp.pi) + 1 / (12 * z) - 1 / (360 * z**3) + 1 / (1260 * z**5)
for n, s in [(2, 1), (100, 50)]:
    exact = mp.log(mp.factorial(n + 1) / (mp.factorial(s) * mp.factorial(n - s)))
    st = stirling_lgamma(n + 2) - stirling_lgamma(s + 1) - stirling_lgamma(n - s + 1)
    show(f"stirling n={n} s={s} exact/stirling/relgap", (float(exact), float(st), float(abs(st - exact) / abs(exact))))

# alpha1 on the Bernstein window, n=4096, s=2048
def alpha1(n, s):
    n, s = mp.mpf(n), mp.mpf(s)
    thn = s / n
    alpha = mp.sqrt(n / (thn * (1 - thn)))
    L = n ** (mp.mpf(1) / 12)
    eps = L * mp.sqrt(2) / alpha
    best = 0
    for y in mp.linspace(-eps, eps, 1001):
        if y == 0:
            continue
        lr = s * mp.log(1 + y / thn) + (n - s) * mp.log(1 - y / (1 - thn))
        best = max(best, abs(lr * (-2 * s * (n - s) / (n**3 * y**2)) - 1))
    return float(L), float(eps), float(best)
show("n=4096 L, eps, alpha1", alpha1(4096, 2048))
show("n=16384 L, eps, alpha1", alpha1(16384, 8192))

# measured outside-window ratio vs bound
def outside_ratio(n, s, prior):
    thn = s / n
    L, eps, a1 = alpha1(n, s)
    r = lambda y: mp.exp(s * mp.log(1 + y / thn) + (n - s) * mp.log(1 - y / (1 - thn)))
    f = lambda y: prior(thn + y) * r(y)
    R = mp.quad(f, [-thn, -eps]) + mp.quad(f, [eps, 1 - thn])
    M = 1.0 if prior(0.5) == 1 else 1.5
    return float(R), float(M * mp.exp(-L**2 * (1 - a1)))
uni = lambda t: mp.mpf(1)
b22 = lambda t: 6 * t * (1 - t)
for n in (4096, 16384):
    show(f"n={n} uniform R, bound", outside_ratio(n, n // 2, uni))
    show(f"n={n} beta22 R, bound", outside_ratio(n, n // 2, b22))

# von Mises product integral, binomial factors a=0.5
def vm(n, psi):
    a = mp.mpf("0.5")
    rn = mp.sqrt(n / (2 * a * (1 - a)))
    def f(u):
        x = a + u / rn
        if x <= 0 or x >= 1:
            return 0
        return psi(x) * mp.exp(n * (a * mp.log(x / a) + (1 - a) * mp.log((1 - x) / (1 - a))))
    return float(mp.quad(f, [-a * rn, -3, 0, 3, (1 - a) * rn]))
for n in (100, 10000):
    show(f"vonMises n={n} psi=1", vm(n, lambda x: 1))
    show(f"vonMises n={n} psi=beta22", vm(n, lambda x: 6 * x * (1 - x)))
show("sqrt(pi)", float(mp.sqrt(mp.pi)))

# TV distances
show("TV N(0,1) N(1,1)", float(2 * mp.ncdf(0.5) - 1))
x = np.linspace(-30, 30, 10_000_001)
h = x[1] - x[0]
p1 = stats.norm.pdf(x)
p2 = stats.norm.pdf(x, scale=2.0)
show("TV N(0,1) N(0,var4) Riemann 1e7", 0.5 * np.sum(np.abs(p1 - p2)) * h)
p3 = stats.norm.pdf(x, scale=np.sqrt(2.0))
show("TV N(0,1) N(0,var2) Riemann 1e7", 0.5 * np.sum(np.abs(p1 - p3)) * h)
xx = np.linspace(-6, 7, 13_000_001)
d = np.abs(stats.norm.pdf(xx) - stats.norm.pdf(xx - 1))
show("sup|phi - phi(.-1)| and argmax", (d.max(), xx[np.argmax(d)]))

# Beta posterior vs N(0,1) TV in rescaled coordinates, fixed freq 0.5
def beta_tv(n, s, a0=1.0, b0=1.0):
    thn = s / n
    al = np.sqrt(n / (thn * (1 - thn)))
    u = np.linspace(-12, 12, 2_400_001)
    th = thn + u / al
    ok = (th > 0) & (th < 1)
    g = np.zeros_like(u)
    g[ok] = stats.beta(s + a0, n - s + b0).pdf(th[ok]) / al
    return 0.5 * integrate.simpson(np.abs(g - stats.norm.pdf(u)), x=u)
tvs = [beta_tv(n, n // 2) for n in (100, 1000, 10000)]
show("TV beta vs normal n=1e2,1e3,1e4", tvs)
show("fitted slope", np.polyfit(np.log([100, 1000, 10000]), np.log(tvs), 1)[0])

# prior washout n=1e4 uniform vs beta(2,5), same data s=5000
def washout(n, s):
    thn = s / n
    al = np.sqrt(n / (thn * (1 - thn)))
    u = np.linspace(-12, 12, 2_400_001)
    th = thn + u / al
    g1 = stats.beta(s + 1, n - s + 1).pdf(th) / al
    g2 = stats.beta(s + 2, n - s + 5).pdf(th) / al
    return 0.5 * integrate.simpson(np.abs(g1 - g2), x=u)
show("washout TV n=1e4", washout(10000, 5000))

# Dirichlet z-covariance
def dir_zcov(alpha, n):
    alpha = np.asarray(alpha, float)
    a0 = alpha.sum()
    cov = (np.diag(alpha) * a0 - np.outer(alpha, alpha)) / (a0**2 * (a0 + 1))
    return n * cov[:-1, :-1]
show("Dir(2,2,2) z-cov n=3", dir_zcov([2, 2, 2], 3).tolist())
show("Dir(334,334,335) z-cov n=1000", dir_zcov([334, 334, 335], 1000).tolist())
show("Dir(3334,3334,3335) z-cov n=1e4", dir_zcov([3334, 3334, 3335], 10000).tolist())

# pearson tails
show("pearson k=2 chi0=1.959964", float(mp.erfc(1.959964 / mp.sqrt(2))))
chi0 = mp.sqrt(2 * mp.log(10))
show("chi2 approx k=2 lambda0=0.1", float(mp.erfc(chi0 / mp.sqrt(2))))

# exact type I via enumeration with 0^0=1, ties included
def exact_type1(n, p, lam0):
    k = len(p)
    from itertools import product
    total = mp.mpf(0)
    def comps(n, k):
        if k == 1:
            yield (n,)
            return
        for i in range(n + 1):
            for rest in comps(n - i, k - 1):
                yield (i,) + rest
    loglam0 = mp.log(lam0)
    for c in comps(n, k):
        ll = mp.mpf(0)
        for ni, pi in zip(c, p):
            if ni:
                ll += ni * mp.log(pi * n / ni)
        if ll <= loglam0 + mp.mpf(10) ** -12:
            lp = mp.loggamma(n + 1) + sum(ni * mp.log(pi) - mp.loggamma(ni + 1) for ni, pi in zip(c, p))
            total += mp.exp(lp)
    return float(total)
show("exact k=2 n=4 lam0=0.1", exact_type1(4, [0.5, 0.5], 0.1))

# rate at an asymmetric frequency (skewness term present)
def beta_tv_freq(n, a):
    s = round(a * n)
    return beta_tv(n, s)
tv3 = [beta_tv_freq(n, 0.3) for n in (100, 1000, 10000)]
show("TV beta vs normal a=0.3", tv3)
show("fitted slope a=0.3", np.polyfit(np.log([100, 1000, 10000]), np.log(tv3), 1)[0])

# expansion remainder halving at a=0.3
def R1(n, a):
    s = a * n
    th = s / n
    al = np.sqrt(n / (th * (1 - th)))
    ell = lambda t: s * mp.log(t) + (n - s) * mp.log(1 - t)
    return float(ell(th + 1 / al) - ell(th) + 0.5)
show("R_n(1) a=0.3 n=100,400,1600", [R1(n, 0.3) for n in (100, 400, 1600)])

# Bayes risk at k=10, uniform prior, negative quadratic gain
def bayes_J(k, T, gain):
    tot = 0.0
    for s in range(k + 1):
        t = T(s, k)
        f = lambda th: gain(t, th) * stats.binom.pmf(s, k, th)
        tot += integrate.quad(f, 0, 1, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return tot
quad_gain = lambda t, th: -(t - th) ** 2
panel = {
    "mle": lambda s, k: s / k,
    "posterior-mean": lambda s, k: (s + 1) / (k + 2),
    "posterior-median": lambda s, k: stats.beta(s + 1, k - s + 1).median(),
    "constant(0.5)": lambda s, k: 0.5,
}
for k in (10, 100):
    show(f"J quadratic k={k}", {kname: bayes_J(k, T, quad_gain) for kname, T in panel.items()})
exp_gain = lambda t, th: np.exp(-100.0 * (t - th) ** 2)
show("J exp(D=100) posterior-mean k=10,100", [bayes_J(k, panel["posterior-mean"], exp_gain) for k in (10, 100)])

# Neyman duality: exact type-I (vectorized enumeration) vs posterior Dirichlet draws
def exact_type1_fast(n, p, loglam0):
    p = np.asarray(p, float)
    k = len(p)
    lf = special.gammaln(np.arange(n + 1) + 1)
    if k == 2:
        n1 = np.arange(n + 1)
        comps = np.stack([n1, n - n1], axis=1)
    else:
        n1, n2 = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
        m = n1 + n2 <= n
        comps = np.stack([n1[m], n2[m], n - n1[m] - n2[m]], axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(comps > 0, comps * np.log(p * n / np.maximum(comps, 1)), 0.0)
    loglam = terms.sum(axis=1)
    logpmf = lf[n] - lf[comps].sum(axis=1) + (comps * np.log(p)).sum(axis=1)
    rej = loglam <= loglam0 + 1e-12 * max(1.0, abs(loglam0))
    return np.exp(logpmf[rej]).sum()

rng = np.random.default_rng(20240601)
def posterior_prob(counts, chi0sq, draws=1_000_000):
    counts = np.asarray(counts, float)
    n = counts.sum()
    x = rng.dirichlet(counts + 1.0, size=draws)
    chit = ((counts - x * n) ** 2 / counts).sum(axis=1)
    pr = (chit >= chi0sq).mean()
    return pr, np.sqrt(pr * (1 - pr) / draws)

for k, counts in [(2, [500, 500]), (3, [333, 333, 334])]:
    p = [1.0 / k] * k
    for lam0 in (0.5, 0.1, 0.01):
        ex = exact_type1_fast(1000, p, np.log(lam0))
        po, se = posterior_prob(counts, -2 * np.log(lam0))
        show(f"duality k={k} lam0={lam0} exact/post/se/gap", (ex, po, se, abs(ex - po)))

p = np.array([0.32, 0.32, 0.36]); c = np.array([300, 300, 400])
loglam = (c * np.log(p * 1000 / c)).sum()
ex = exact_type1_fast(1000, p, loglam)
po, se = posterior_prob(c, -2 * loglam)
show("duality (300,300,400) p=(.32,.32,.36) loglam/exact/post/gap", (loglam, ex, po, abs(ex - po)))
show("posterior (300,300,400) chi0=2", posterior_prob(c, 4.0))
lam = (2 * (0.5 / 0.2) ** 2 * (0.5 / 0.8) ** 8)
c10 = np.array([2, 8]); ll10 = (c10 * np.log(0.5 * 10 / c10)).sum()
show("small-n k=2 n=10 counts(2,8) exact/post", (exact_type1_fast(10, [0.5, 0.5], ll10), posterior_prob(c10, -2 * ll10)))

# multinomial Monte Carlo TV pilot: Dirichlet(counts+1) in z = sqrt(n)(x-a) vs N(0,(2H)^-1)
def mn_tv(counts, draws=10_000_000, seed=11):
    r = np.random.default_rng(seed)
    counts = np.asarray(counts, float)
    n = counts.sum()
    a = counts / n
    t = len(a)
    H = np.full((t - 1, t - 1), 1 / (2 * a[-1])) + np.diag(1 / (2 * a[:-1]))
    P = 2 * H
    cov = np.linalg.inv(P)
    z = r.multivariate_normal(np.zeros(t - 1), cov, size=draws)
    logq = -0.5 * np.einsum("ij,jk,ik->i", z, P, z) + 0.5 * np.log(np.linalg.det(P)) - (t - 1) / 2 * np.log(2 * np.pi)
    x = a[:-1] + z / np.sqrt(n)
    xt = 1 - x.sum(axis=1)
    full = np.column_stack([x, xt])
    ok = (full > 0).all(axis=1)
    alpha = counts + 1
    logB = special.gammaln(alpha).sum() - special.gammaln(alpha.sum())
    logp = np.full(draws, -np.inf)
    logp[ok] = ((alpha - 1) * np.log(full[ok])).sum(axis=1) - logB - (t - 1) / 2 * np.log(n)
    w = np.abs(np.exp(logp - logq) - 1)
    return 0.5 * w.mean(), 0.5 * w.std() / np.sqrt(draws)
for counts in ([100, 100, 100], [3333, 3333, 3334], [10000, 10000, 10000]):
    show(f"multinomial MC TV {counts}", mn_tv(counts))

# Le Cam pilot: TV between rescaled posterior (centre mu_k, scale sqrt(k Gamma(theta0))) and N(0,1)
def lecam_tv(k, s, gamma):
    mu = s / k
    sc = np.sqrt(k * gamma)
    u = np.linspace(-12, 12, 240_001)
    th = mu - u / sc
    g = np.zeros_like(u)
    ok = (th > 0) & (th < 1)
    g[ok] = stats.beta(s + 1, k - s + 1).pdf(th[ok]) / sc
    return 0.5 * integrate.simpson(np.abs(g - stats.norm.pdf(u)), x=u)
r = np.random.default_rng(5)
for k in (50, 500, 5000):
    tvs = []
    for _ in range(400):
        s = (r.random(k) < 0.5).sum()
        if 0 < s < k:
            tvs.append(lecam_tv(k, s, 4.0))
    tvs = np.array(tvs)
    show(f"lecam k={k} median/p90/frac<0.1", (np.median(tvs), np.quantile(tvs, 0.9), (tvs < 0.1).mean()))
