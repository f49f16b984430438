"""High-precision reference values frozen into the Rust test suites."""
import mpmath as mp

mp.mp.dps = 50


def kappa0(beta0, alpha):
    q = alpha / (alpha - 1)
    return (4 * beta0 * (2 / (q - 2)) ** (1 / q)) ** alpha / alpha


def subordination(r, p, kappa, lam0):
    q = p / (p - 1)
    f = lambda lam: mp.exp(lam * r - lam ** q / (q * kappa ** q)) * lam ** ((q - 2) / 2)
    peak = (kappa ** q * r) ** (1 / (q - 1)) if r > 0 else lam0
    pts = sorted({lam0, max(lam0, peak / 2), max(lam0, peak), max(lam0, 2 * peak), max(lam0, 4 * peak)})
    val = mp.quad(f, pts + [mp.inf])
    target = mp.exp(kappa ** p * r ** p / p)
    return val, val / target


def main():
    a = mp.mpf(3) / 2
    print("kappa0(1, 3/2) =", mp.nstr(kappa0(mp.mpf(1), a), 20))
    print("16*sqrt(2)/3   =", mp.nstr(16 * mp.sqrt(2) / 3, 20))
    p, kappa, lam0 = mp.mpf(3) / 2, mp.mpf(10), mp.mpf(1)
    rs = [mp.mpf(10) ** (-1 + 2 * mp.mpf(i) / 19) for i in range(20)]
    ratios = []
    for r in rs:
        _, ratio = subordination(r, p, kappa, lam0)
        ratios.append(ratio)
        print("r=%s ratio=%s" % (mp.nstr(r, 17), mp.nstr(ratio, 17)))
    print("band max/min =", mp.nstr(max(ratios) / min(ratios), 17))
    print("ratio at r->0 =", mp.nstr(subordination(mp.mpf(0), p, kappa, lam0)[1], 17))
    print("large-r limit sqrt(2 pi kappa^q/(q-1)) =", mp.nstr(mp.sqrt(2 * mp.pi * kappa ** 3 / 2), 17))
    for s in [mp.mpf(1), mp.mpf(1) / 2, mp.mpf(1) / 10, mp.mpf(1) / 100]:
        print("hardy s=%s AB=%s" % (s, mp.nstr(1 / (16 * (s ** 2 + 1)), 17)))
    print("poincare f=1 ratio =", mp.nstr(mp.sqrt(2) / mp.sqrt(mp.mpf(16) / 3), 17))
    j1 = mp.besseljzero(0, 1)
    for n, j in [(1, mp.pi / 2), (2, j1), (3, mp.pi)]:
        print("C(%d) = %s" % (n, mp.nstr(8 * mp.sqrt(2) / (3 * j), 17)))
    print("cutoff |phi'| =", mp.nstr(3 * 8 * mp.mpf(15) / 8, 17), " |phi''| =", mp.nstr(3 * 64 * 10 / mp.sqrt(3), 17))


if __name__ == "__main__":
    main()
