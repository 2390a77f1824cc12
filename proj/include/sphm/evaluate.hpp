#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sphm/batch.hpp"
#include "sphm/matrix.hpp"

namespace sphm {

/// Cosine of the angle between two feature vectors, clamped to [-1, 1].
/// Zero vectors are a domain error.
double cosine_score(std::span<const double> a, std::span<const double> b);

/// Angular Fisher score S_w / S_b: within-class scatter sums (1 - cos(x, m_i))
/// per sample, between-class scatter sums n_i (1 - cos(m_i, m)) per class,
/// with raw arithmetic-mean vectors (means are deliberately not renormalized).
/// Lower is more discriminative. Fewer than two classes is degenerate.
double angular_fisher_score(const Matrix& features, std::span<const int> labels);

struct RocPoint {
    double far = 0.0;  // false accept rate
    double tar = 0.0;  // true accept rate
};

struct IndexPair {
    std::size_t a = 0;
    std::size_t b = 0;
    bool same = false;
};

struct VerificationResult {
    double accuracy = 0.0;
    double best_threshold = 0.0;
    std::vector<RocPoint> roc;  // ordered by increasing FAR
};

/// Threshold sweep over all distinct scores plus the -1/+1 sentinels; a pair
/// is called "same" when its score >= threshold. Accuracy ties resolve toward
/// the lower threshold. Needs at least one positive and one negative pair.
/// `same` holds 0/1 flags.
VerificationResult verification_from_scores(std::span<const double> scores,
                                            std::span<const std::uint8_t> same);

/// Scores each (a, b) pair by cosine and runs the threshold sweep.
VerificationResult verification(const Matrix& features, std::span<const IndexPair> pairs);

struct IdentificationResult {
    double rank1 = 0.0;
    std::vector<double> cmc;  // cmc[r-1] = accuracy at rank <= r
};

/// Closed-gallery ranking: each probe scores every gallery identity by its
/// best per-feature cosine; a probe is correct at rank r when its own label
/// ranks within the top r identities. Score ties break toward the smaller
/// identity index. max_rank may not exceed the gallery identity count.
IdentificationResult identification(const LabeledBatch& gallery, const LabeledBatch& probes,
                                    std::size_t max_rank);

struct AngleHistogram {
    std::vector<double> bin_edges;      // bins + 1 uniform edges over [0, pi]
    std::vector<std::uint64_t> counts;  // size bins

    std::uint64_t total() const;
};

/// Histograms of pairwise feature angles, same-class pairs vs cross-class
/// pairs, binned uniformly over [0, pi].
std::pair<AngleHistogram, AngleHistogram> pair_angle_histograms(const Matrix& features,
                                                                std::span<const int> labels,
                                                                std::size_t bins);

struct AngleStats {
    double max_intra = 0.0;  // largest same-class pairwise feature angle
    double min_inter = 0.0;  // smallest cross-class pairwise feature angle
};

/// Needs at least two classes; a class with a single sample simply adds no
/// intra-class pairs.
AngleStats intra_inter_angle_stats(const Matrix& features, std::span<const int> labels);

struct EvalReport {
    double afs = 0.0;
    double verification_accuracy = 0.0;
    double best_threshold = 0.0;
    double rank1 = 0.0;
    std::vector<RocPoint> roc;
    std::vector<double> cmc;
    AngleHistogram pos_angle_hist;
    AngleHistogram neg_angle_hist;

    /// JSON document with fixed field names; curves as arrays of [x, y],
    /// histograms as {bin_edges, counts}.
    std::string to_json() const;
};

}  // namespace sphm
