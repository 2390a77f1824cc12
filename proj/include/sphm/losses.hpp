#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sphm/matrix.hpp"

namespace sphm {

/// Margin multiplier and the annealing path of the blended target logit.
struct MarginConfig {
    int m = 4;
    double lambda_start = 1000.0;
    double lambda_min = 5.0;
    double lambda_decay = 0.1;  // per-iteration hyperbolic decay rate

    void validate() const;
};

/// lambda is non-increasing in iteration and never drops below lambda_min.
struct AnnealState {
    std::uint64_t iteration = 0;
    double lambda = 0.0;

    static AnnealState initial(const MarginConfig& config);
};

/// lambda <- max(lambda_min, lambda_start / (1 + lambda_decay * iteration))
/// with the iteration counter already advanced.
AnnealState advance_anneal(const AnnealState& state, const MarginConfig& config);

struct LossOutput {
    double loss = 0.0;
    Matrix grad_features;                        // N x d
    Matrix grad_weights;                         // d x K
    std::vector<double> per_sample_target_angle; // theta_{y_i,i}, radians in [0, pi]
};

/// Plain softmax cross-entropy over logits f_j = w_j.x + b_j, mean over the
/// batch, with max-shifted log-sum-exp. Gradients w.r.t. features and weights.
LossOutput softmax_loss(const Matrix& features, const Matrix& weights,
                        std::span<const double> biases, std::span<const int> labels);

/// Softmax with unit-norm weight columns and no biases; logits reduce to
/// |x| cos(theta_j). Columns off unit norm by more than 1e-9 are rejected.
LossOutput modified_softmax_loss(const Matrix& features, const Matrix& weights,
                                 std::span<const int> labels);

/// Angular-margin loss. The target-class logit blends the plain cosine logit
/// with the psi logit, (lambda |x| cos(theta) + |x| psi(theta)) / (1 + lambda);
/// lambda = 0 recovers the pure margin loss, m = 1 recovers modified softmax.
/// The backward pass differentiates psi through cos(theta) = w.x / |x| with the
/// forward pass's segment index held fixed.
LossOutput asoftmax_loss(const Matrix& features, const Matrix& weights,
                         std::span<const int> labels, const MarginConfig& config,
                         const AnnealState& anneal);

/// Logit matrices behind the losses, exposed so decision-rule properties can
/// be checked without re-deriving them from loss values.
Matrix cosine_logits(const Matrix& features, const Matrix& weights);
Matrix asoftmax_logits(const Matrix& features, const Matrix& weights,
                       std::span<const int> labels, int m, double lambda);

}  // namespace sphm
