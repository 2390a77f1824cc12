#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphm/batch.hpp"
#include "sphm/losses.hpp"
#include "sphm/matrix.hpp"

namespace sphm {

/// Fully connected embedder: input -> hidden widths -> embedding dim. Hidden
/// layers use the rectifier; the embedding output layer is affine with no
/// nonlinearity so features can occupy every quadrant.
struct EmbedderConfig {
    std::vector<std::size_t> layer_widths;  // at least {input, embedding}
    std::string activation = "relu";
    std::uint64_t seed = 0;

    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t embedding_dim() const { return layer_widths.back(); }
    void validate() const;
};

enum class LossKind { softmax, modified, asoftmax };

LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

struct TrainConfig {
    std::size_t iterations = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.1;
    std::vector<std::size_t> lr_decay_points;  // strictly increasing iteration indices
    double lr_decay_factor = 0.1;
    MarginConfig margin;
    LossKind loss_kind = LossKind::asoftmax;

    void validate() const;
};

struct DenseLayer {
    Matrix weight;             // in x out
    std::vector<double> bias;  // out

    friend bool operator==(const DenseLayer& a, const DenseLayer& b) = default;
};

/// Full trainable state. The classifier is a d x K matrix with unit-norm
/// columns and, by construction, no bias parameters.
struct ModelState {
    EmbedderConfig config;
    std::vector<DenseLayer> layers;  // hidden layers then the embedding layer
    Matrix classifier;               // d x K
    AnnealState anneal;
    std::uint64_t iteration = 0;

    std::size_t k_classes() const { return classifier.cols(); }

    friend bool operator==(const ModelState& a, const ModelState& b);
};

/// Raised when a training step produces a non-finite loss; carries the
/// iteration, lambda, and learning rate for diagnosis.
class TrainingDivergence : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Hidden weights get variance-scaled symmetric uniform init, biases zero;
/// classifier columns are drawn normal and renormalized to unit length.
/// Deterministic for a given config seed.
ModelState init_model(const EmbedderConfig& config, std::size_t k_classes);

/// Forward pass. Rectifier on hidden layers only; the embedding output keeps
/// its sign, so negative coordinates are expected.
Matrix embed(const ModelState& state, const Matrix& inputs);

/// Step-decay schedule: the base rate is multiplied by lr_decay_factor once
/// the iteration reaches each decay point.
double learning_rate_at(const TrainConfig& config, std::uint64_t iteration);

struct ModelGradients {
    double loss = 0.0;
    std::vector<DenseLayer> layers;  // same shapes as ModelState::layers
    Matrix classifier;
};

/// Pure forward: loss of the batch under the configured loss at the current
/// anneal state, without touching the model.
double batch_loss(const ModelState& state, const LabeledBatch& batch, const TrainConfig& config);

/// Loss and gradients for every parameter (hidden layers by backpropagation,
/// classifier from the loss). Weight renormalization is NOT differentiated
/// through; it is applied as a projection after the optimizer step.
ModelGradients compute_gradients(const ModelState& state, const LabeledBatch& batch,
                                 const TrainConfig& config);

/// One projected-SGD step: gradients, parameter update at the scheduled rate,
/// classifier columns renormalized, anneal advanced (margin loss only).
/// Returns the pre-update loss. Non-finite loss raises TrainingDivergence.
double train_step(ModelState& state, const LabeledBatch& batch, const TrainConfig& config);

/// Drives train_step over seeded-shuffled minibatches (reshuffled each epoch
/// from the run seed) for config.iterations steps; returns the loss trace.
std::vector<double> train(ModelState& state, const LabeledBatch& dataset,
                          const TrainConfig& config);

}  // namespace sphm
