"""Independent high-precision values frozen into the C++ tests.

Run: python3 tests/oracle/oracle_values.py
"""
import mpmath as mp

mp.mp.dps = 50


def t(y):
    return mp.log1p(mp.e ** y)


def tinv(x):
    return mp.log(mp.expm1(x))


def centring_objective(delta):
    # E[t^-1(Z)] with Z = U^{-1/2} - delta, written in z: density 2 (z + delta)^-3.
    lo = 1 - delta
    return mp.quad(lambda z: tinv(z) * 2 * (z + delta) ** -3, [lo, lo + 1, lo + 10, mp.inf])


def main():
    vals = {
        "softplus(-50)": t(-50),
        "softplus_inv(1e-8)": tinv(mp.mpf("1e-8")),
        "2 o 5": t(2 * tinv(5)),
        "t(t^-1 20 + t^-1 30)": t(tinv(20) + tinv(30)),
        "10 (+) 10": t(2 * tinv(10)),
        "d(50, 40)": t(tinv(50) - tinv(40)),
        "t(0.5 t^-1 100 + 0.5 t^-1 200)": t(mp.mpf("0.5") * tinv(100) + mp.mpf("0.5") * tinv(200)),
        "atan2(4, 3)": mp.atan2(4, 3),
    }
    delta = mp.findroot(centring_objective, (mp.mpf("0.9"), mp.mpf("0.95")), solver="anderson")
    vals["delta"] = delta
    vals["2 - delta"] = 2 - delta
    for k, v in vals.items():
        print(f"{k:34s} {mp.nstr(v, 17)}")


if __name__ == "__main__":
    main()
