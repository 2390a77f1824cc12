#include "sphm/angular.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sphm/matrix.hpp"

namespace sphm {

namespace {

constexpr double kClampTol = 1e-12;

double clamp_cosine(double c, const char* what) {
    if (c > 1.0) {
        if (c > 1.0 + kClampTol)
            throw std::domain_error(std::string(what) + ": cosine " + std::to_string(c) +
                                    " outside [-1, 1]");
        return 1.0;
    }
    if (c < -1.0) {
        if (c < -1.0 - kClampTol)
            throw std::domain_error(std::string(what) + ": cosine " + std::to_string(c) +
                                    " outside [-1, 1]");
        return -1.0;
    }
    return c;
}

void require_margin(int m, const char* what) {
    if (m < 1) throw std::domain_error(std::string(what) + ": m must be >= 1, got " +
                                       std::to_string(m));
}

}  // namespace

double cos_multiple(double cos_theta, int m) {
    require_margin(m, "cos_multiple");
    const double c = clamp_cosine(cos_theta, "cos_multiple");
    double t_prev = 1.0;  // T_0
    double t = c;         // T_1
    for (int k = 1; k < m; ++k) {
        const double t_next = 2.0 * c * t - t_prev;
        t_prev = t;
        t = t_next;
    }
    return t;
}

double cos_multiple_derivative(double cos_theta, int m) {
    require_margin(m, "cos_multiple_derivative");
    const double c = clamp_cosine(cos_theta, "cos_multiple_derivative");
    if (m == 1) return 1.0;
    double u_prev = 1.0;      // U_0
    double u = 2.0 * c;       // U_1
    for (int k = 1; k < m - 1; ++k) {
        const double u_next = 2.0 * c * u - u_prev;
        u_prev = u;
        u = u_next;
    }
    return static_cast<double>(m) * u;
}

int psi_segment(double theta, int m) {
    int k = static_cast<int>(std::floor(theta * m / kPi));
    if (k < 0) k = 0;
    if (k > m - 1) k = m - 1;
    return k;
}

double psi(double theta, int m) {
    require_margin(m, "psi");
    if (!(theta >= 0.0 && theta <= kPi))
        throw std::domain_error("psi: theta " + std::to_string(theta) + " outside [0, pi]");
    const int k = psi_segment(theta, m);
    const double cmt = cos_multiple(std::cos(theta), m);
    return ((k & 1) ? -cmt : cmt) - 2.0 * k;
}

double angular_margin(double theta12, int m) {
    if (m < 2)
        throw std::domain_error("angular_margin: no margin defined for m = " + std::to_string(m));
    if (!(theta12 > 0.0 && theta12 <= kPi))
        throw std::domain_error("angular_margin: theta12 must lie in (0, pi]");
    return (m - 1.0) / (m + 1.0) * theta12;
}

BinaryDecision classify_binary(std::span<const double> x, std::span<const double> w1,
                               std::span<const double> w2, int m) {
    require_margin(m, "classify_binary");
    if (x.size() != w1.size() || x.size() != w2.size())
        throw std::invalid_argument("classify_binary: mismatched vector lengths");
    for (const auto [w, name] : {std::pair{w1, "w1"}, std::pair{w2, "w2"}}) {
        if (std::abs(norm(w) - 1.0) > 1e-9)
            throw std::invalid_argument(std::string("classify_binary: ") + name +
                                        " is not unit-norm");
    }
    const double r = norm(x);
    if (r == 0.0) throw std::domain_error("classify_binary: zero-norm feature");

    const double c1 = clamp_cosine(dot(x, w1) / r, "classify_binary");
    const double c2 = clamp_cosine(dot(x, w2) / r, "classify_binary");
    // theta_i <= pi/m expressed on cosines; the stringent rule compares
    // cos(m*theta_i) against the plain cosine of the other class.
    const double cos_pi_m = std::cos(kPi / m);
    if (c1 >= cos_pi_m && cos_multiple(c1, m) > c2) return BinaryDecision::class1;
    if (c2 >= cos_pi_m && cos_multiple(c2, m) > c1) return BinaryDecision::class2;
    return BinaryDecision::neither;
}

bool bound_inequalities_hold(int m, double theta12) {
    if (m < 2) throw std::domain_error("bound_inequalities_hold: m must be >= 2");
    if (!(theta12 > 0.0 && theta12 <= kPi))
        throw std::domain_error("bound_inequalities_hold: theta12 must lie in (0, pi]");
    const double min_inter = (m - 1.0) * theta12 / (m + 1.0);
    double max_intra;
    if (theta12 <= (m - 1.0) * kPi / m) {
        max_intra = theta12 / (m - 1.0) + theta12 / (m + 1.0);
    } else {
        max_intra = (2.0 * kPi - theta12) / (m + 1.0) + theta12 / (m + 1.0);
    }
    return max_intra <= min_inter;
}

double binary_bound_gap(double m) {
    return 1.0 / (m - 1.0) + 1.0 / (m + 1.0) - (m - 1.0) / (m + 1.0);
}

double binary_bound_root() {
    double lo = 2.0, hi = 10.0;  // gap(2) > 0 > gap(10), gap monotone decreasing here
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (binary_bound_gap(mid) > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

double m_min_binary() {
    return 2.0 + std::sqrt(3.0);
}

double m_min_multiclass(int k) {
    if (k < 3) throw std::domain_error("m_min_multiclass: need k >= 3 classes, got " +
                                       std::to_string(k));
    return 3.0;
}

bool multiclass_bound_holds(int m, double theta_prev, double theta_next) {
    if (m < 1) throw std::domain_error("multiclass_bound_holds: m must be >= 1");
    if (!(theta_prev > 0.0) || !(theta_next > 0.0))
        throw std::domain_error("multiclass_bound_holds: adjacent angles must be positive");
    const double max_intra = theta_prev / (m + 1.0) + theta_next / (m + 1.0);
    const double min_inter =
        std::min((m - 1.0) * theta_prev, (m - 1.0) * theta_next) / (m + 1.0);
    return max_intra <= min_inter;
}

bool multiclass_bound_holds_uniform(int m, int k) {
    if (k < 3) throw std::domain_error("multiclass_bound_holds_uniform: need k >= 3 classes");
    const double theta = 2.0 * kPi / k;
    return multiclass_bound_holds(m, theta, theta);
}

}  // namespace sphm
