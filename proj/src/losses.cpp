#include "sphm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sphm/angular.hpp"

namespace sphm {

namespace {

constexpr double kNormFloor = 1e-12;

void MarginConfigCheck(const MarginConfig& c) {
    c.validate();
}

void check_labels(std::span<const int> labels, std::size_t n, std::size_t k) {
    if (labels.size() != n)
        throw std::invalid_argument("loss: " + std::to_string(labels.size()) + " labels for " +
                                    std::to_string(n) + " samples");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= k)
            throw std::invalid_argument("loss: label " + std::to_string(labels[i]) +
                                        " at index " + std::to_string(i) + " outside [0, " +
                                        std::to_string(k) + ")");
}

void check_unit_columns(const Matrix& weights, const char* what) {
    const std::vector<double> norms = column_norms(weights);
    for (std::size_t j = 0; j < norms.size(); ++j)
        if (std::abs(norms[j] - 1.0) > 1e-9)
            throw std::invalid_argument(std::string(what) + ": weight column " +
                                        std::to_string(j) + " has norm " +
                                        std::to_string(norms[j]) + ", expected 1");
}

double clamp1(double c) {
    return std::clamp(c, -1.0, 1.0);
}

struct CrossEntropy {
    double loss = 0.0;
    Matrix grad_logits;  // includes the 1/N batch factor
};

// Mean cross-entropy with max-shift stabilization; per-sample terms are
// reduced pairwise so the result is independent of any parallel split.
CrossEntropy cross_entropy_mean(const Matrix& logits, std::span<const int> labels) {
    const std::size_t n = logits.rows();
    const std::size_t k = logits.cols();
    CrossEntropy ce;
    ce.grad_logits = Matrix(n, k);
    std::vector<double> per_sample(n);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto f = logits.row(i);
        const double fmax = *std::max_element(f.begin(), f.end());
        double z = 0.0;
        for (std::size_t j = 0; j < k; ++j) z += std::exp(f[j] - fmax);
        const double lse = fmax + std::log(z);
        per_sample[i] = lse - f[static_cast<std::size_t>(labels[i])];
        for (std::size_t j = 0; j < k; ++j) {
            double g = std::exp(f[j] - lse);
            if (j == static_cast<std::size_t>(labels[i])) g -= 1.0;
            ce.grad_logits(i, j) = g * inv_n;
        }
    }
    ce.loss = pairwise_sum(per_sample) * inv_n;
    if (!std::isfinite(ce.loss)) throw std::runtime_error("loss: non-finite cross-entropy");
    return ce;
}

std::vector<double> target_angles(const Matrix& features, const Matrix& weights,
                                  std::span<const int> labels, bool unit_weights) {
    std::vector<double> angles(features.rows());
    std::vector<double> wnorms;
    if (!unit_weights) wnorms = column_norms(weights);
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto x = features.row(i);
        const auto y = static_cast<std::size_t>(labels[i]);
        double u = 0.0;
        for (std::size_t l = 0; l < x.size(); ++l) u += x[l] * weights(l, y);
        double denom = std::max(norm(x), kNormFloor);
        if (!unit_weights) denom *= std::max(wnorms[y], kNormFloor);
        angles[i] = std::acos(clamp1(u / denom));
    }
    return angles;
}

void check_inputs(const Matrix& features, const Matrix& weights, const char* what) {
    if (features.cols() != weights.rows())
        throw std::invalid_argument(std::string(what) + ": feature dim " + features.shape_str() +
                                    " vs weights " + weights.shape_str());
    if (!features.all_finite() || !weights.all_finite())
        throw std::invalid_argument(std::string(what) + ": non-finite input");
    if (features.rows() == 0) throw std::invalid_argument(std::string(what) + ": empty batch");
}

}  // namespace

void MarginConfig::validate() const {
    if (m < 1) throw std::invalid_argument("MarginConfig: m must be >= 1, got " +
                                           std::to_string(m));
    if (!(lambda_start >= 0.0)) throw std::invalid_argument("MarginConfig: lambda_start < 0");
    if (!(lambda_min >= 0.0)) throw std::invalid_argument("MarginConfig: lambda_min < 0");
    if (lambda_min > lambda_start)
        throw std::invalid_argument("MarginConfig: lambda_min exceeds lambda_start");
    if (!(lambda_decay >= 0.0)) throw std::invalid_argument("MarginConfig: lambda_decay < 0");
}

AnnealState AnnealState::initial(const MarginConfig& config) {
    config.validate();
    return {0, config.lambda_start};
}

AnnealState advance_anneal(const AnnealState& state, const MarginConfig& config) {
    AnnealState next;
    next.iteration = state.iteration + 1;
    next.lambda = std::max(config.lambda_min,
                           config.lambda_start /
                               (1.0 + config.lambda_decay * static_cast<double>(next.iteration)));
    return next;
}

LossOutput softmax_loss(const Matrix& features, const Matrix& weights,
                        std::span<const double> biases, std::span<const int> labels) {
    check_inputs(features, weights, "softmax_loss");
    if (biases.size() != weights.cols())
        throw std::invalid_argument("softmax_loss: " + std::to_string(biases.size()) +
                                    " biases for " + std::to_string(weights.cols()) + " classes");
    for (double b : biases)
        if (!std::isfinite(b)) throw std::invalid_argument("softmax_loss: non-finite bias");
    check_labels(labels, features.rows(), weights.cols());

    Matrix logits = matmul(features, weights);
    for (std::size_t i = 0; i < logits.rows(); ++i)
        for (std::size_t j = 0; j < logits.cols(); ++j) logits(i, j) += biases[j];

    const CrossEntropy ce = cross_entropy_mean(logits, labels);
    LossOutput out;
    out.loss = ce.loss;
    out.grad_features = matmul(ce.grad_logits, transpose(weights));
    out.grad_weights = matmul(transpose(features), ce.grad_logits);
    out.per_sample_target_angle = target_angles(features, weights, labels, false);
    return out;
}

LossOutput modified_softmax_loss(const Matrix& features, const Matrix& weights,
                                 std::span<const int> labels) {
    check_inputs(features, weights, "modified_softmax_loss");
    check_unit_columns(weights, "modified_softmax_loss");
    check_labels(labels, features.rows(), weights.cols());

    const Matrix logits = matmul(features, weights);
    const CrossEntropy ce = cross_entropy_mean(logits, labels);
    LossOutput out;
    out.loss = ce.loss;
    out.grad_features = matmul(ce.grad_logits, transpose(weights));
    out.grad_weights = matmul(transpose(features), ce.grad_logits);
    out.per_sample_target_angle = target_angles(features, weights, labels, true);
    return out;
}

Matrix cosine_logits(const Matrix& features, const Matrix& weights) {
    check_inputs(features, weights, "cosine_logits");
    check_unit_columns(weights, "cosine_logits");
    return matmul(features, weights);
}

Matrix asoftmax_logits(const Matrix& features, const Matrix& weights,
                       std::span<const int> labels, int m, double lambda) {
    if (m < 1) throw std::invalid_argument("asoftmax_logits: m must be >= 1");
    if (!(lambda >= 0.0)) throw std::invalid_argument("asoftmax_logits: lambda must be >= 0");
    Matrix logits = cosine_logits(features, weights);
    check_labels(labels, features.rows(), weights.cols());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        const double r = norm(features.row(i));
        const double u = logits(i, y);  // |x| cos(theta_y)
        const double c = clamp1(u / std::max(r, kNormFloor));
        const int k = psi_segment(std::acos(c), m);
        const double sign = (k & 1) ? -1.0 : 1.0;
        const double psi_val = sign * cos_multiple(c, m) - 2.0 * k;
        logits(i, y) = (lambda * u + r * psi_val) / (1.0 + lambda);
    }
    return logits;
}

LossOutput asoftmax_loss(const Matrix& features, const Matrix& weights,
                         std::span<const int> labels, const MarginConfig& config,
                         const AnnealState& anneal) {
    MarginConfigCheck(config);
    if (!(anneal.lambda >= 0.0))
        throw std::invalid_argument("asoftmax_loss: lambda must be >= 0, got " +
                                    std::to_string(anneal.lambda));
    check_inputs(features, weights, "asoftmax_loss");
    check_unit_columns(weights, "asoftmax_loss");
    check_labels(labels, features.rows(), weights.cols());

    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    const int m = config.m;
    const double lambda = anneal.lambda;

    Matrix logits = matmul(features, weights);

    struct SampleTerms {
        double r, c, sign, psi_val, dpsi;
    };
    std::vector<SampleTerms> terms(n);
    std::vector<double> angles(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        SampleTerms& t = terms[i];
        t.r = std::max(norm(features.row(i)), kNormFloor);
        const double u = logits(i, y);
        t.c = clamp1(u / t.r);
        angles[i] = std::acos(t.c);
        const int k = psi_segment(angles[i], m);
        t.sign = (k & 1) ? -1.0 : 1.0;
        t.psi_val = t.sign * cos_multiple(t.c, m) - 2.0 * k;
        t.dpsi = t.sign * cos_multiple_derivative(t.c, m);
        logits(i, y) = (lambda * u + t.r * t.psi_val) / (1.0 + lambda);
    }

    const CrossEntropy ce = cross_entropy_mean(logits, labels);

    LossOutput out;
    out.loss = ce.loss;
    out.per_sample_target_angle = std::move(angles);
    // Start from the gradients of plain cosine logits, then swap in the
    // blended target-logit derivative for each sample's own class.
    out.grad_features = matmul(ce.grad_logits, transpose(weights));
    out.grad_weights = matmul(transpose(features), ce.grad_logits);
    const double blend = 1.0 / (1.0 + lambda);
    for (std::size_t i = 0; i < n; ++i) {
        const auto y = static_cast<std::size_t>(labels[i]);
        const double g = ce.grad_logits(i, y);
        if (g == 0.0) continue;
        const SampleTerms& t = terms[i];
        const auto x = features.row(i);
        for (std::size_t l = 0; l < d; ++l) {
            const double w_ly = weights(l, y);
            const double x_over_r = x[l] / t.r;
            // d f_y / d x_l for f_y = (lambda u + r psi(c)) / (1 + lambda),
            // u = w_y.x, r = |x|, c = u / r; the segment offset -2k is constant.
            const double df_dx =
                blend * (lambda * w_ly + t.psi_val * x_over_r +
                         t.dpsi * (w_ly - t.c * x_over_r));
            out.grad_features(i, l) += g * (df_dx - w_ly);
            const double df_dw = blend * (lambda + t.dpsi) * x[l];
            out.grad_weights(l, y) += g * (df_dw - x[l]);
        }
    }
    require_finite(out.grad_features, "asoftmax_loss feature gradient");
    require_finite(out.grad_weights, "asoftmax_loss weight gradient");
    return out;
}

}  // namespace sphm
