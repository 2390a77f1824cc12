#include "sphm/embedder.hpp"

#include <cmath>
#include <numeric>

#include "sphm/rng.hpp"

namespace sphm {

namespace {

struct ForwardCache {
    std::vector<Matrix> activations;  // a_0 = inputs, ..., a_L = embedding
};

ForwardCache forward_cached(const ModelState& state, const Matrix& inputs) {
    if (inputs.cols() != state.config.input_dim())
        throw std::invalid_argument("embed: input width " + std::to_string(inputs.cols()) +
                                    " does not match configured " +
                                    std::to_string(state.config.input_dim()));
    ForwardCache cache;
    cache.activations.reserve(state.layers.size() + 1);
    cache.activations.push_back(inputs);
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        const DenseLayer& layer = state.layers[l];
        Matrix z = matmul(cache.activations.back(), layer.weight);
        for (std::size_t i = 0; i < z.rows(); ++i)
            for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += layer.bias[j];
        const bool last = (l + 1 == state.layers.size());
        if (!last) {
            for (double& v : z.data()) v = v > 0.0 ? v : 0.0;
        }
        cache.activations.push_back(std::move(z));
    }
    return cache;
}

LossOutput run_loss(const ModelState& state, const Matrix& embeddings,
                    std::span<const int> labels, const TrainConfig& config) {
    switch (config.loss_kind) {
        case LossKind::softmax: {
            const std::vector<double> zero_bias(state.classifier.cols(), 0.0);
            return softmax_loss(embeddings, state.classifier, zero_bias, labels);
        }
        case LossKind::modified:
            return modified_softmax_loss(embeddings, state.classifier, labels);
        case LossKind::asoftmax:
            return asoftmax_loss(embeddings, state.classifier, labels, config.margin,
                                 state.anneal);
    }
    throw std::logic_error("run_loss: unknown loss kind");
}

}  // namespace

void EmbedderConfig::validate() const {
    if (layer_widths.size() < 2)
        throw std::invalid_argument("EmbedderConfig: need at least input and embedding widths");
    for (std::size_t w : layer_widths)
        if (w < 1) throw std::invalid_argument("EmbedderConfig: zero layer width");
    if (activation != "relu")
        throw std::invalid_argument("EmbedderConfig: unsupported activation '" + activation +
                                    "' (only 'relu')");
}

LossKind loss_kind_from_string(const std::string& name) {
    if (name == "softmax") return LossKind::softmax;
    if (name == "modified") return LossKind::modified;
    if (name == "asoftmax") return LossKind::asoftmax;
    throw std::invalid_argument("unknown loss kind '" + name +
                                "' (expected softmax|modified|asoftmax)");
}

std::string to_string(LossKind kind) {
    switch (kind) {
        case LossKind::softmax: return "softmax";
        case LossKind::modified: return "modified";
        case LossKind::asoftmax: return "asoftmax";
    }
    return "?";
}

void TrainConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("TrainConfig: iterations must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(learning_rate > 0.0) && learning_rate != 0.0)
        throw std::invalid_argument("TrainConfig: learning_rate must be >= 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor < 1.0))
        throw std::invalid_argument("TrainConfig: lr_decay_factor must lie in (0, 1)");
    for (std::size_t i = 1; i < lr_decay_points.size(); ++i)
        if (lr_decay_points[i] <= lr_decay_points[i - 1])
            throw std::invalid_argument("TrainConfig: lr_decay_points must be strictly increasing");
    margin.validate();
}

bool operator==(const ModelState& a, const ModelState& b) {
    return a.config.layer_widths == b.config.layer_widths &&
           a.config.activation == b.config.activation && a.config.seed == b.config.seed &&
           a.layers == b.layers && a.classifier == b.classifier &&
           a.anneal.iteration == b.anneal.iteration && a.anneal.lambda == b.anneal.lambda &&
           a.iteration == b.iteration;
}

ModelState init_model(const EmbedderConfig& config, std::size_t k_classes) {
    config.validate();
    if (k_classes < 2) throw std::invalid_argument("init_model: need k_classes >= 2");

    ModelState state;
    state.config = config;
    Rng rng(config.seed);
    for (std::size_t l = 0; l + 1 < config.layer_widths.size(); ++l) {
        const std::size_t fan_in = config.layer_widths[l];
        const std::size_t fan_out = config.layer_widths[l + 1];
        DenseLayer layer;
        layer.weight = Matrix(fan_in, fan_out);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& w : layer.weight.data()) w = rng.uniform(-bound, bound);
        layer.bias.assign(fan_out, 0.0);
        state.layers.push_back(std::move(layer));
    }
    Matrix classifier(config.embedding_dim(), k_classes);
    for (double& w : classifier.data()) w = rng.normal();
    state.classifier = normalize_columns(classifier);
    state.anneal = AnnealState{0, 0.0};
    return state;
}

Matrix embed(const ModelState& state, const Matrix& inputs) {
    return forward_cached(state, inputs).activations.back();
}

double learning_rate_at(const TrainConfig& config, std::uint64_t iteration) {
    double lr = config.learning_rate;
    for (std::size_t point : config.lr_decay_points)
        if (iteration >= point) lr *= config.lr_decay_factor;
    return lr;
}

double batch_loss(const ModelState& state, const LabeledBatch& batch,
                  const TrainConfig& config) {
    const ForwardCache cache = forward_cached(state, batch.features);
    return run_loss(state, cache.activations.back(), batch.labels, config).loss;
}

ModelGradients compute_gradients(const ModelState& state, const LabeledBatch& batch,
                                 const TrainConfig& config) {
    if (batch.size() == 0) throw std::invalid_argument("compute_gradients: empty batch");
    batch.validate();

    const ForwardCache cache = forward_cached(state, batch.features);
    const LossOutput loss = run_loss(state, cache.activations.back(), batch.labels, config);

    ModelGradients grads;
    grads.loss = loss.loss;
    grads.classifier = loss.grad_weights;
    grads.layers.resize(state.layers.size());

    // Backpropagate grad wrt the embedding through the dense stack. ReLU masks
    // come from the stored activations (a > 0 iff z > 0 for hidden layers).
    Matrix delta = loss.grad_features;
    for (std::size_t l = state.layers.size(); l-- > 0;) {
        const Matrix& input = cache.activations[l];
        grads.layers[l].weight = matmul(transpose(input), delta);
        grads.layers[l].bias.assign(state.layers[l].bias.size(), 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i)
            for (std::size_t j = 0; j < delta.cols(); ++j)
                grads.layers[l].bias[j] += delta(i, j);
        if (l > 0) {
            delta = matmul(delta, transpose(state.layers[l].weight));
            const Matrix& act = cache.activations[l];
            for (std::size_t i = 0; i < delta.rows(); ++i)
                for (std::size_t j = 0; j < delta.cols(); ++j)
                    if (act(i, j) <= 0.0) delta(i, j) = 0.0;
        }
    }
    return grads;
}

double train_step(ModelState& state, const LabeledBatch& batch, const TrainConfig& config) {
    config.validate();
    if (batch.class_count > state.k_classes())
        throw std::invalid_argument("train_step: batch has more classes than the classifier");
    // The margin loss starts from its configured lambda_start; a freshly
    // initialized model has no anneal history yet.
    if (config.loss_kind == LossKind::asoftmax && state.iteration == 0 &&
        state.anneal.iteration == 0)
        state.anneal = AnnealState::initial(config.margin);

    const double lr = learning_rate_at(config, state.iteration);
    const ModelGradients grads = compute_gradients(state, batch, config);
    if (!std::isfinite(grads.loss))
        throw TrainingDivergence("train_step: non-finite loss at iteration " +
                                 std::to_string(state.iteration) + " (lambda " +
                                 std::to_string(state.anneal.lambda) + ", lr " +
                                 std::to_string(lr) + ")");

    if (lr != 0.0) {
        for (std::size_t l = 0; l < state.layers.size(); ++l) {
            auto& w = state.layers[l].weight.data();
            const auto& gw = grads.layers[l].weight.data();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
            for (std::size_t j = 0; j < state.layers[l].bias.size(); ++j)
                state.layers[l].bias[j] -= lr * grads.layers[l].bias[j];
        }
        auto& c = state.classifier.data();
        const auto& gc = grads.classifier.data();
        for (std::size_t i = 0; i < c.size(); ++i) c[i] -= lr * gc[i];
    }
    // Projection step: the loss treats columns as unit vectors, so pull them
    // back onto the sphere after every update.
    state.classifier = normalize_columns(state.classifier);

    if (config.loss_kind == LossKind::asoftmax)
        state.anneal = advance_anneal(state.anneal, config.margin);
    state.iteration += 1;
    return grads.loss;
}

std::vector<double> train(ModelState& state, const LabeledBatch& dataset,
                          const TrainConfig& config) {
    config.validate();
    dataset.validate();
    if (dataset.size() < config.batch_size)
        throw std::invalid_argument("train: dataset smaller than batch_size");

    const std::size_t batches_per_epoch = dataset.size() / config.batch_size;
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<double> history;
    history.reserve(config.iterations);
    std::uint64_t epoch = 0;
    std::size_t batch_index = batches_per_epoch;  // force a shuffle on entry
    LabeledBatch batch;
    batch.features = Matrix(config.batch_size, dataset.dim());
    batch.labels.resize(config.batch_size);
    batch.class_count = dataset.class_count;

    for (std::size_t it = 0; it < config.iterations; ++it) {
        if (batch_index >= batches_per_epoch) {
            Rng shuffle_rng = Rng::derive(state.config.seed, epoch++);
            shuffle_rng.shuffle(order);
            batch_index = 0;
        }
        const std::size_t base = batch_index * config.batch_size;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const std::size_t src = order[base + b];
            for (std::size_t j = 0; j < dataset.dim(); ++j)
                batch.features(b, j) = dataset.features(src, j);
            batch.labels[b] = dataset.labels[src];
        }
        ++batch_index;
        history.push_back(train_step(state, batch, config));
    }
    return history;
}

}  // namespace sphm
