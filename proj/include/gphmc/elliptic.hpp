#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace gphmc {

namespace detail {

// K from the complementary modulus b0 = sqrt(1 - m): pi / (2 agm(1, b0)).
template <typename Scalar>
Scalar elliptic_K_from_b0(Scalar b0) {
    if (b0 <= Scalar(0)) throw std::domain_error("elliptic_K: parameter m must be < 1");
    Scalar a = Scalar(1);
    Scalar b = b0;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int it = 0; it < 64 && std::abs(a - b) > eps * a; ++it) {
        const Scalar an = (a + b) / Scalar(2);
        b = std::sqrt(a * b);
        a = an;
    }
    return Scalar(M_PI) / (Scalar(2) * a);
}

}  // namespace detail

// Complete elliptic integral of the first kind, parameter convention
// K(m) = int_0^{pi/2} dtheta / sqrt(1 - m sin^2 theta), m in [0, 1).
template <typename Scalar>
Scalar elliptic_K(Scalar m) {
    if (m < Scalar(0) || m >= Scalar(1))
        throw std::domain_error("elliptic_K: parameter m must lie in [0,1)");
    return detail::elliptic_K_from_b0(std::sqrt(Scalar(1) - m));
}

// K(1 - mc), accurate when mc is tiny (avoids the 1 - m cancellation).
template <typename Scalar>
Scalar elliptic_K_complementary(Scalar mc) {
    if (mc <= Scalar(0) || mc > Scalar(1))
        throw std::domain_error("elliptic_K_complementary: complement must lie in (0,1]");
    return detail::elliptic_K_from_b0(std::sqrt(mc));
}

template <typename Scalar>
struct JacobiElliptic {
    Scalar sn, cn, dn;
};

// Real Jacobi elliptic functions via the descending AGM / Landen ladder
// (Abramowitz & Stegun 16.4). `mc` is 1 - m supplied exactly, which keeps the
// ladder accurate as m approaches 1.
template <typename Scalar>
JacobiElliptic<Scalar> jacobi_elliptic(Scalar u, Scalar m, Scalar mc) {
    if (m < Scalar(0) || m > Scalar(1))
        throw std::domain_error("jacobi_elliptic: parameter m must lie in [0,1]");
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    if (m < Scalar(1e-12)) {
        const Scalar sn = std::sin(u), cn = std::cos(u);
        return {sn, cn, std::sqrt(Scalar(1) - m * sn * sn)};
    }
    if (mc < Scalar(1e-12)) {
        const Scalar sech = Scalar(1) / std::cosh(u);
        return {std::tanh(u), sech, sech};
    }

    constexpr int kMaxLevels = 32;
    Scalar a[kMaxLevels], c[kMaxLevels];
    a[0] = Scalar(1);
    c[0] = std::sqrt(m);
    Scalar b = std::sqrt(mc);
    int levels = 0;
    while (levels + 1 < kMaxLevels) {
        const Scalar an = (a[levels] + b) / Scalar(2);
        const Scalar cn = (a[levels] - b) / Scalar(2);
        b = std::sqrt(a[levels] * b);
        ++levels;
        a[levels] = an;
        c[levels] = cn;
        if (std::abs(cn) <= eps * an) break;
    }

    Scalar phi = std::ldexp(a[levels] * u, levels);
    Scalar phi_next = phi;  // amplitude one level up, needed for dn
    for (int i = levels; i >= 1; --i) {
        phi_next = phi;
        const Scalar s = std::clamp(c[i] / a[i] * std::sin(phi), Scalar(-1), Scalar(1));
        phi = (phi + std::asin(s)) / Scalar(2);
    }
    const Scalar sn = std::sin(phi);
    const Scalar cn = std::cos(phi);
    const Scalar cos_diff = std::cos(phi_next - phi);
    const Scalar dn = cos_diff != Scalar(0) ? cn / cos_diff
                                            : std::sqrt(Scalar(1) - m * sn * sn);
    return {sn, cn, dn};
}

template <typename Scalar>
JacobiElliptic<Scalar> jacobi_elliptic(Scalar u, Scalar m) {
    return jacobi_elliptic(u, m, Scalar(1) - m);
}

}  // namespace gphmc
