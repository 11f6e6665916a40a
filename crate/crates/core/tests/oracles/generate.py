"""Multiprecision oracle for the frozen expected values in the Rust tests.

Every quantity here is computed from the defining formulas of the maps with
mpmath (numerical differentiation of the map itself, adaptive quadrature),
never from the closed-form derivative expressions used by the library.

Run: python3 generate.py
"""
import mpmath as mp

mp.mp.dps = 60
C = mp.mpf(16)


def g(r, c=C):
    return 1 / mp.log(mp.log(c / r))


def H(r, c=C):
    return mp.exp(-1 / g(r, c)) / g(r, c)


def G(r, c=C):
    return g(r, c) * mp.sqrt(1 + H(r, c) ** 2)


def f2(r, th, c=C):
    """Polar cusp map; th in [-pi/2, 3pi/2)."""
    a = mp.atan(H(r, c))
    if -mp.pi / 2 < th < mp.pi / 2:
        ang = 2 * th / mp.pi * a
    else:
        ang = 2 * th - mp.pi + (2 - 2 * th / mp.pi) * a
    return G(r, c) * mp.expj(ang)


def jac_polar(r, th, c=C):
    """Df in the polar-aligned frames, by differentiating f2 itself."""
    w = f2(r, th, c)
    er = w / abs(w)
    dr = mp.diff(lambda s: f2(s, th, c), r)
    dt = mp.diff(lambda s: f2(r, s, c), th) / r
    a11 = mp.re(dr * mp.conj(er))
    a21 = mp.im(dr * mp.conj(er))
    a12 = mp.re(dt * mp.conj(er))
    a22 = mp.im(dt * mp.conj(er))
    return a11, a12, a21, a22


def kdist(m):
    a11, a12, a21, a22 = m
    mat = mp.matrix([[a11, a12], [a21, a22]])
    s = mp.svd_r(mat, compute_uv=False)
    det = a11 * a22 - a12 * a21
    return max(s) ** 2 / det


def lip_integral(r, b):
    return mp.quad(lambda t: mp.exp(1 / t), [r, (r + b) / 2, b])


def show(name, v):
    print(f"{name} = {mp.nstr(v, 20)}")


print("# radial profile")
show("g(1e-10)", g(mp.mpf("1e-10")))
r = mp.mpf("1e-6")
show("g(1e-6)", g(r))
show("g'(1e-6)", mp.diff(g, r))
show("H(1e-6)", H(r))
show("H'(1e-6)", mp.diff(H, r))
show("G(1e-6)", G(r))
show("G'(1e-6)", mp.diff(G, r))
show("g_inv(0.5)", C * mp.exp(-mp.e ** 2))
show("g(1)", g(1))
show("G(1)", G(1))

print("# maps")
G1 = G(1)
show("chain(0)", G1 / (1 + G1))
z = mp.mpf("0.1") + 1j * mp.exp(-10)
w = z / (z + 1)
show("f3(0.1+ie^-10).re", mp.re(w))
show("f3(0.1+ie^-10).im", mp.im(w))

print("# jacobian at (0.01, pi)")
m = jac_polar(mp.mpf("0.01"), mp.pi)
for n, v in zip(["a11", "a12", "a21", "a22"], m):
    show(n, v)
show("K", kdist(m))
m = jac_polar(mp.mpf("0.3"), mp.mpf(1))
print("# jacobian at (0.3, 1.0)")
for n, v in zip(["a11", "a12", "a21", "a22"], m):
    show(n, v)
m = jac_polar(mp.mpf("0.3"), mp.mpf(3) * mp.pi / 4)
print("# jacobian at (0.3, 3pi/4)")
for n, v in zip(["a11", "a12", "a21", "a22"], m):
    show(n, v)

print("# bound ratios K / (log(c/r) loglog(c/r))")
for k in [2, 4, 10, 20, 30]:
    r = mp.mpf(10) ** (-k)
    den = mp.log(C / r) * mp.log(mp.log(C / r))
    kpi = kdist(jac_polar(r, mp.pi))
    k0 = kdist(jac_polar(r, mp.mpf(0)))
    print(f"r=1e-{k}: ratio(pi) = {mp.nstr(kpi/den, 15)}  ratio(0) = {mp.nstr(k0/den, 15)}")
# asymptotic limit of ratio(pi): (2 - 2/pi atanH) (1+H^2)/((1+H^2) + g H rH'/(r g'))
for k in [100, 1000, 10**6]:
    L1 = mp.mpf(k)
    L2 = mp.log(L1)
    Hh = L2 / L1
    print(f"L1={k}: ratio(pi) ~ {mp.nstr((2 - 2/mp.pi*mp.atan(Hh))*(1+Hh**2)/((1+Hh**2)+(L2-1)*L2**2/L1**2), 10)}")

print("# chain distortion near -1 (x = -1 + 10^-k on the real axis)")
for k in [2, 4, 8]:
    x = -1 + mp.mpf(10) ** (-k)
    w1 = (x + 1) / (1 - x)
    print(f"k={k}: K = {mp.nstr(kdist(jac_polar(w1, mp.mpf(0))), 15)}")
print("K at x=0 (polar (1,0))", mp.nstr(kdist(jac_polar(mp.mpf(1), mp.mpf(0))), 15))

print("# lemma 2 energies (int_r^{d/2} e^{1/t} dt)^{-1}")
for r in ["0.2", "0.1", "0.0625", "0.03125"]:
    r = mp.mpf(r)
    I = lip_integral(r, mp.mpf("0.5"))
    print(f"r={r}: energy = {mp.nstr(1/I, 20)}  log = {mp.nstr(-mp.log(I), 20)}")
I = lip_integral(mp.mpf("0.2"), mp.mpf("0.5"))
show("u(0.3) for r=0.2,d=1", 1 - lip_integral(mp.mpf("0.2"), mp.mpf("0.3")) / I)

print("# boundary arc x1_max(t): x1^2 + e^{-2/x1} = t^2")
for t in ["0.1", "0.3"]:
    t = mp.mpf(t)
    x = mp.findroot(lambda x: x**2 + mp.exp(-2 / x) - t**2, t)
    show(f"x1_max({t})", x)

print("# omega-tilde arc: |f3(x1 + i e^{-1/x1})| = t, E_t preimage diameter")
for t in ["0.05", "0.25"]:
    t = mp.mpf(t)
    x = mp.findroot(lambda x: abs((x + 1j * mp.exp(-1 / x)) / (x + 1j * mp.exp(-1 / x) + 1)) - t, t)
    logr = mp.log(C) - mp.exp(1 / x)
    rr = mp.exp(logr)
    diam = 2 * mp.sin(2 * mp.atan(rr))
    print(f"t={t}: x1={mp.nstr(x, 20)} log r={mp.nstr(logr, 20)} log diam E_t={mp.nstr(mp.log(diam), 20)}")
