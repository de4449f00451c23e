#include "cavitykit/voigt.hpp"

#include <cmath>

namespace cavitykit {

std::complex<double> faddeeva_w(std::complex<double> z) {
    using Cx = std::complex<double>;
    const double x = z.real();
    const double y = z.imag();
    const Cx t(y, -x);
    const double s = std::abs(x) + y;

    if (s >= 15.0) {
        return t * 0.5641896 / (0.5 + t * t);
    }
    if (s >= 5.5) {
        const Cx u = t * t;
        return t * (1.410474 + u * 0.5641896) / (0.75 + u * (3.0 + u));
    }
    if (y >= 0.195 * std::abs(x) - 0.176) {
        return (16.4955 + t * (20.20933 + t * (11.96482 + t * (3.778987 + t * 0.5642236)))) /
               (16.4955 + t * (38.82363 + t * (39.27121 + t * (21.69274 + t * (6.699398 + t)))));
    }
    const Cx u = t * t;
    const Cx num = t * (36183.31 - u * (3321.9905 - u * (1540.787 - u * (219.0313 - u *
                        (35.76683 - u * (1.320522 - u * 0.56419))))));
    const Cx den = 32066.6 - u * (24322.84 - u * (9022.228 - u * (2186.181 - u *
                        (364.2191 - u * (61.57037 - u * (1.841439 - u))))));
    return std::exp(u) - num / den;
}

double voigt_profile(double x, double sigma, double gamma) {
    const double rt2 = std::sqrt(2.0);
    const std::complex<double> z(x / (sigma * rt2), gamma / (sigma * rt2));
    return faddeeva_w(z).real() / (sigma * rt2 * std::sqrt(M_PI));
}

double voigt_hwhm(double sigma, double gamma) {
    const double fg = sigma * std::sqrt(2.0 * std::log(2.0));
    return 0.5346 * gamma + std::sqrt(0.2166 * gamma * gamma + fg * fg);
}

}  // namespace cavitykit
