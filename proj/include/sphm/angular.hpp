#pragma once

#include <span>

namespace sphm {

inline constexpr double kPi = 3.14159265358979323846;

/// cos(m*theta) evaluated as the degree-m Chebyshev polynomial T_m in
/// c = cos(theta), via the recurrence T_0 = 1, T_1 = c, T_{k+1} = 2c T_k - T_{k-1}.
/// No inverse trigonometry is involved, so the value (and its derivative) can
/// be chained through c = w.x / |x| in gradient code. Inputs within 1e-12 of
/// [-1, 1] are clamped; anything further out is a domain error.
double cos_multiple(double cos_theta, int m);

/// d/dc T_m(c) = m * U_{m-1}(c), via the second-kind Chebyshev recurrence.
double cos_multiple_derivative(double cos_theta, int m);

/// Segment index k of theta in [k pi/m, (k+1) pi/m], computed as
/// floor(theta*m/pi) and clamped to [0, m-1] so theta = pi is well defined.
int psi_segment(double theta, int m);

/// Piecewise monotone extension of cos(m*theta) to all of [0, pi]:
/// psi(theta) = (-1)^k cos(m*theta) - 2k on segment k. Continuous, strictly
/// decreasing from psi(0) = 1 to psi(pi) = -(2m - 1).
double psi(double theta, int m);

/// Width of the angular band between the two stringent decision regions of a
/// binary problem whose weight vectors are theta12 apart: (m-1)/(m+1) * theta12.
/// Requires m >= 2; no margin is defined below that.
double angular_margin(double theta12, int m);

enum class BinaryDecision { class1, class2, neither };

/// Stringent binary decision rule: class 1 iff cos(m*theta1) > cos(theta2)
/// with theta1 <= pi/m, symmetrically for class 2, otherwise `neither`
/// (the margin band). w1 and w2 must be unit vectors within 1e-9.
BinaryDecision classify_binary(std::span<const double> x, std::span<const double> w1,
                               std::span<const double> w2, int m);

/// Whether margin m forces the maximal intra-class angle below the minimal
/// inter-class angle for a binary problem with weight separation theta12.
/// Evaluates the small-separation inequality when theta12 <= (m-1)pi/m and
/// the wrap-around variant otherwise.
bool bound_inequalities_hold(int m, double theta12);

/// Signed gap (max intra-class coefficient minus min inter-class coefficient)
/// of the small-separation binary inequality, for real-valued m. The root is
/// the binary m_min lower bound 2 + sqrt(3).
double binary_bound_gap(double m);

/// Numeric root of binary_bound_gap on (2, 10), found by bisection.
double binary_bound_root();

/// Analytic binary-case lower bound: 2 + sqrt(3).
double m_min_binary();

/// Multi-class lower bound under uniformly spaced weights: 3, independent of
/// the class count k (the common adjacent angle 2 pi/k cancels). k >= 3.
double m_min_multiclass(int k);

/// Direct check of the multi-class inequality for one class flanked by
/// adjacent weight angles theta_prev and theta_next. Only the uniform case
/// carries a bound claim; arbitrary angles are accepted for exploration.
bool multiclass_bound_holds(int m, double theta_prev, double theta_next);

/// Uniform-spacing case: adjacent angles both 2 pi / k.
bool multiclass_bound_holds_uniform(int m, int k);

}  // namespace sphm
