"""Closed forms used as independent references.

Written from the Gamma-function identities directly; nothing here imports the
package under test.
"""

import math

from scipy.special import hyp1f1

G = math.gamma


def C1(s):
    return 4 ** s * G(0.5 + s) / (math.sqrt(math.pi) * abs(G(-s)))


def Ck(k, s):
    return 4 ** s * G(k / 2 + s) / (math.pi ** (k / 2) * abs(G(-s)))


def sphere(k):
    """|S^{k-1}|."""
    return 2 * math.pi ** (k / 2) / G(k / 2)


def c_hat(g, s):
    """Radial directional value of |x|^-g at |x| = 1."""
    return -4 ** s * G(g / 2 + s) * G((1 - g) / 2) / (G((1 - g) / 2 - s) * G(g / 2))


def c_perp(g, s):
    """Orthogonal directional value of |x|^-g at |x| = 1."""
    return C1(s) * G(-s) * G(g / 2 + s) / G(g / 2)


def c_power(g, s):
    """Radial directional value of +|x|^g at |x| = 1; zero at g = 2s-1."""
    if abs(g - (2 * s - 1)) < 1e-14:
        return 0.0
    return -4 ** s * G(-g / 2 + s) * G((1 + g) / 2) / (G((1 + g) / 2 - s) * G(-g / 2))


def F_s(s):
    """Integral of ln|1-t^2| t^-(1+s) over (0, inf)."""
    return math.pi / math.tan(math.pi * s / 2) / s


def F_beta(beta, s):
    return C1(s) * beta ** s * G(1 - s) / s


def gauss_directional(s, r, theta):
    """I_xi exp(-|x|^2) at |x| = r, angle theta between xi and x."""
    return (-math.exp(-r * r * math.sin(theta) ** 2) * 4 ** s * G(s + 0.5) / G(0.5)
            * hyp1f1(s + 0.5, 0.5, -r * r * math.cos(theta) ** 2))


def gauss_laplacian(s, k, r):
    """k-dimensional -(-Delta)^s of exp(-|y|^2) at |y| = r."""
    return -4 ** s * G(s + k / 2) / G(k / 2) * hyp1f1(s + k / 2, k / 2, -r * r)


def power_directional(g, s, r, theta):
    """I_xi |x|^-g at |x| = r for theta in {0, pi/2}."""
    if theta == 0:
        return c_hat(g, s) * r ** (-g - 2 * s)
    return c_perp(g, s) * r ** (-g - 2 * s)


def power_cusp(g, r, theta):
    """Leading term of f(theta) - f(0) for |x|^-g (raw integral, no C_s r^-2s)."""
    return r ** (-g) * math.sqrt(math.pi) * G((g - 1) / 2) / G(g / 2) * math.sin(theta) ** (1 - g)
