"""Arbitrary-precision reference values frozen into the C++ unit tests.

Run with: python3 tests/oracles/oracle_values.py
Everything here is evaluated from the closed forms with mpmath at 50 digits,
independently of the C++ implementation.
"""
import mpmath as mp

mp.mp.dps = 50


def cdf(x, a, b, s):
    return (-mp.expm1(-(x / s) ** b)) ** a


def pdf(x, a, b, s):
    u = (x / s) ** b
    return a * b / s * (x / s) ** (b - 1) * mp.exp(-u) * (-mp.expm1(-u)) ** (a - 1)


def quantile(p, a, b, s):
    return s * (-mp.log(1 - p ** (1 / a))) ** (1 / b)


def hazard(x, a, b, s):
    return pdf(x, a, b, s) / (1 - cdf(x, a, b, s))


def psi(z, a):
    return 1 + mp.log1p(-z) * (1 + ((1 - z) / z) * (1 - a / (1 - z ** a)))


def s_of_z(z, a, b):
    return (b * z * mp.log(z) * ((z - 1) ** a + (a - z) * z ** (a - 1))
            + (b - 1) * (z - 1) * (z ** a - (z - 1) ** a))


def fisher(a, b, s, p):
    """Fisher entries from the displayed single integrals, x-space integrand."""
    top = p ** (1 / a)
    L = lambda x: 1 + mp.log(-mp.log1p(-x)) * psi(x, a)
    A = lambda x: 1 / a + mp.log(x) / (1 - x ** a)
    q = lambda f, hi: mp.quad(f, [0, hi / 1000, hi / 10, hi])
    i11 = q(lambda x: (1 + mp.log(x) / (1 - x)) ** 2, p) / a ** 2
    i22 = a / b ** 2 * q(lambda x: L(x) ** 2 * x ** (a - 1), top)
    i33 = a * (b / s) ** 2 * q(lambda x: psi(x, a) ** 2 * x ** (a - 1), top)
    i12 = a / b * q(lambda x: A(x) * L(x) * x ** (a - 1), top)
    i13 = -a * b / s * q(lambda x: A(x) * psi(x, a) * x ** (a - 1), top)
    i23 = -a / s * q(lambda x: L(x) * psi(x, a) * x ** (a - 1), top)
    return [i11, i22, i33, i12, i13, i23]


def show(label, v):
    print(f"{label:40s} {mp.nstr(v, 20)}")


show("cdf(2.0; 2,1.5,1)", cdf(mp.mpf(2), 2, mp.mpf('1.5'), 1))
show("pdf(0.7; 3,0.5,2)", pdf(mp.mpf('0.7'), 3, mp.mpf('0.5'), 2))
show("quantile(0.9; 5.2707,1,31.0035)", quantile(mp.mpf('0.9'), mp.mpf('5.2707'), 1, mp.mpf('31.0035')))
show("hazard(0.5; 0.5,0.8,1)", hazard(mp.mpf('0.5'), mp.mpf('0.5'), mp.mpf('0.8'), 1))
show("psi(0.5; 2)", psi(mp.mpf('0.5'), 2))
show("s(1.5; 2,2)", s_of_z(mp.mpf('1.5'), 2, 2))
show("s(1.5; 0.5,0.5)", s_of_z(mp.mpf('1.5'), mp.mpf('0.5'), mp.mpf('0.5')))
show("I11(alpha=1, p=0.5)", fisher(1, 1, 1, mp.mpf('0.5'))[0])
for theta in [(2, 1.5, 1, 0.9), (0.5, 2.0, 3.0, 0.6), (4.7446, 1.0444, 33.6008, 1 - mp.mpf('1e-3'))]:
    vals = fisher(*[mp.mpf(t) for t in theta])
    for name, v in zip(["I11", "I22", "I33", "I12", "I13", "I23"], vals):
        show(f"{name}{theta}", v)
