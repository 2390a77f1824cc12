#include "sphm/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "sphm/angular.hpp"

namespace sphm {

namespace {

double checked_cosine(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size())
        throw std::invalid_argument(std::string(what) + ": mismatched vector lengths");
    const double na = norm(a), nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        throw std::domain_error(std::string(what) + ": zero-norm vector");
    return std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
}

double pair_angle(const Matrix& features, std::size_t i, std::size_t j) {
    return std::acos(checked_cosine(features.row(i), features.row(j), "pair angle"));
}

std::vector<std::vector<std::size_t>> group_by_class(std::span<const int> labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0) throw std::invalid_argument("negative class label");
        groups[labels[i]].push_back(i);
    }
    std::vector<std::vector<std::size_t>> out;
    out.reserve(groups.size());
    for (auto& [label, idx] : groups) out.push_back(std::move(idx));
    return out;
}

}  // namespace

double cosine_score(std::span<const double> a, std::span<const double> b) {
    return checked_cosine(a, b, "cosine_score");
}

double angular_fisher_score(const Matrix& features, std::span<const int> labels) {
    if (labels.size() != features.rows())
        throw std::invalid_argument("angular_fisher_score: label count does not match rows");
    const auto classes = group_by_class(labels);
    if (classes.size() < 2)
        throw std::domain_error("angular_fisher_score: need at least 2 classes, got " +
                                std::to_string(classes.size()));

    const std::size_t d = features.cols();
    std::vector<double> global_mean(d, 0.0);
    std::vector<std::vector<double>> class_means;
    class_means.reserve(classes.size());
    for (const auto& members : classes) {
        std::vector<double> mean(d, 0.0);
        for (std::size_t i : members)
            for (std::size_t l = 0; l < d; ++l) mean[l] += features(i, l);
        for (double& v : mean) v /= static_cast<double>(members.size());
        for (std::size_t l = 0; l < d; ++l)
            global_mean[l] += mean[l] * static_cast<double>(members.size());
        class_means.push_back(std::move(mean));
    }
    for (double& v : global_mean) v /= static_cast<double>(features.rows());

    double s_w = 0.0, s_b = 0.0;
    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto& mean = class_means[c];
        for (std::size_t i : classes[c])
            s_w += 1.0 - checked_cosine(features.row(i), mean, "angular_fisher_score");
        s_b += static_cast<double>(classes[c].size()) *
               (1.0 - checked_cosine(mean, global_mean, "angular_fisher_score"));
    }
    if (s_b < 1e-15)
        throw std::domain_error("angular_fisher_score: degenerate geometry (S_b ~ 0)");
    return s_w / s_b;
}

VerificationResult verification_from_scores(std::span<const double> scores,
                                            std::span<const std::uint8_t> same) {
    if (scores.size() != same.size())
        throw std::invalid_argument("verification: score/flag count mismatch");
    std::size_t n_pos = 0;
    for (std::uint8_t s : same) n_pos += s ? 1 : 0;
    const std::size_t n_neg = scores.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw std::invalid_argument("verification: need at least one positive and one negative pair");

    // Sorted scores with positive counts let each threshold be evaluated from
    // prefix sums: predicted-same means score >= threshold.
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    std::vector<double> thresholds;
    thresholds.reserve(scores.size() + 2);
    thresholds.push_back(-1.0);
    for (std::size_t i : order)
        if (thresholds.back() != scores[i]) thresholds.push_back(scores[i]);
    if (thresholds.back() != 1.0) thresholds.push_back(1.0);

    VerificationResult result;
    result.accuracy = -1.0;
    result.roc.reserve(thresholds.size());
    std::size_t cursor = 0;       // pairs strictly below the current threshold
    std::size_t pos_below = 0;
    const double total = static_cast<double>(scores.size());
    for (double t : thresholds) {
        while (cursor < order.size() && scores[order[cursor]] < t) {
            if (same[order[cursor]]) ++pos_below;
            ++cursor;
        }
        const std::size_t neg_below = cursor - pos_below;
        const std::size_t tp = n_pos - pos_below;  // positives at/above t
        const std::size_t fp = n_neg - neg_below;  // negatives at/above t
        const double acc = (static_cast<double>(tp) + static_cast<double>(neg_below)) / total;
        if (acc > result.accuracy) {  // ties keep the earlier (lower) threshold
            result.accuracy = acc;
            result.best_threshold = t;
        }
        result.roc.push_back({static_cast<double>(fp) / static_cast<double>(n_neg),
                              static_cast<double>(tp) / static_cast<double>(n_pos)});
    }
    std::reverse(result.roc.begin(), result.roc.end());  // ascending FAR
    return result;
}

VerificationResult verification(const Matrix& features, std::span<const IndexPair> pairs) {
    std::vector<double> scores(pairs.size());
    std::vector<std::uint8_t> same(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        scores[i] = cosine_score(features.row(pairs[i].a), features.row(pairs[i].b));
        same[i] = pairs[i].same ? 1 : 0;
    }
    return verification_from_scores(scores, same);
}

IdentificationResult identification(const LabeledBatch& gallery, const LabeledBatch& probes,
                                    std::size_t max_rank) {
    if (gallery.size() == 0) throw std::invalid_argument("identification: empty gallery");
    if (probes.size() == 0) throw std::invalid_argument("identification: no probes");
    if (gallery.dim() != probes.dim())
        throw std::invalid_argument("identification: gallery dim " +
                                    std::to_string(gallery.dim()) + " vs probe dim " +
                                    std::to_string(probes.dim()));

    const auto identity_groups = group_by_class(gallery.labels);
    std::vector<int> identity_labels;
    identity_labels.reserve(identity_groups.size());
    for (const auto& members : identity_groups)
        identity_labels.push_back(gallery.labels[members.front()]);

    if (max_rank < 1 || max_rank > identity_groups.size())
        throw std::invalid_argument("identification: max_rank " + std::to_string(max_rank) +
                                    " exceeds gallery identity count " +
                                    std::to_string(identity_groups.size()));

    std::vector<std::uint64_t> correct_at(max_rank, 0);
    for (std::size_t p = 0; p < probes.size(); ++p) {
        const auto probe = probes.features.row(p);
        // Identity score = best cosine over that identity's gallery features.
        std::vector<double> scores(identity_groups.size(), -2.0);
        for (std::size_t g = 0; g < identity_groups.size(); ++g)
            for (std::size_t i : identity_groups[g])
                scores[g] = std::max(scores[g],
                                     cosine_score(probe, gallery.features.row(i)));
        std::size_t own = identity_groups.size();
        for (std::size_t g = 0; g < identity_groups.size(); ++g)
            if (identity_labels[g] == probes.labels[p]) own = g;
        if (own == identity_groups.size()) continue;  // open-set probe: never correct

        // Rank of the probe's own identity; ties break toward the smaller index.
        std::size_t rank = 1;
        for (std::size_t g = 0; g < identity_groups.size(); ++g) {
            if (g == own) continue;
            if (scores[g] > scores[own] || (scores[g] == scores[own] && g < own)) ++rank;
        }
        if (rank <= max_rank) ++correct_at[rank - 1];
    }

    IdentificationResult result;
    result.cmc.resize(max_rank);
    std::uint64_t cum = 0;
    for (std::size_t r = 0; r < max_rank; ++r) {
        cum += correct_at[r];
        result.cmc[r] = static_cast<double>(cum) / static_cast<double>(probes.size());
    }
    result.rank1 = result.cmc[0];
    return result;
}

std::uint64_t AngleHistogram::total() const {
    std::uint64_t t = 0;
    for (std::uint64_t c : counts) t += c;
    return t;
}

std::pair<AngleHistogram, AngleHistogram> pair_angle_histograms(const Matrix& features,
                                                                std::span<const int> labels,
                                                                std::size_t bins) {
    if (bins < 1) throw std::invalid_argument("pair_angle_histograms: bins must be >= 1");
    if (features.rows() < 2)
        throw std::invalid_argument("pair_angle_histograms: need at least 2 samples");
    if (labels.size() != features.rows())
        throw std::invalid_argument("pair_angle_histograms: label count does not match rows");

    AngleHistogram pos, neg;
    for (AngleHistogram* h : {&pos, &neg}) {
        h->counts.assign(bins, 0);
        h->bin_edges.resize(bins + 1);
        for (std::size_t e = 0; e <= bins; ++e)
            h->bin_edges[e] = kPi * static_cast<double>(e) / static_cast<double>(bins);
    }
    for (std::size_t i = 0; i < features.rows(); ++i) {
        for (std::size_t j = i + 1; j < features.rows(); ++j) {
            const double angle = pair_angle(features, i, j);
            std::size_t bin = static_cast<std::size_t>(angle / kPi * static_cast<double>(bins));
            if (bin >= bins) bin = bins - 1;  // angle == pi lands in the last bin
            (labels[i] == labels[j] ? pos : neg).counts[bin] += 1;
        }
    }
    return {pos, neg};
}

AngleStats intra_inter_angle_stats(const Matrix& features, std::span<const int> labels) {
    if (labels.size() != features.rows())
        throw std::invalid_argument("intra_inter_angle_stats: label count does not match rows");
    if (features.rows() == 0) throw std::invalid_argument("intra_inter_angle_stats: empty input");
    const auto classes = group_by_class(labels);
    if (classes.size() < 2)
        throw std::domain_error("intra_inter_angle_stats: min_inter undefined with a single class");

    AngleStats stats{0.0, kPi};
    for (std::size_t i = 0; i < features.rows(); ++i)
        for (std::size_t j = i + 1; j < features.rows(); ++j) {
            const double angle = pair_angle(features, i, j);
            if (labels[i] == labels[j])
                stats.max_intra = std::max(stats.max_intra, angle);
            else
                stats.min_inter = std::min(stats.min_inter, angle);
        }
    return stats;
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json j;
    j["afs"] = afs;
    j["verification_accuracy"] = verification_accuracy;
    j["best_threshold"] = best_threshold;
    j["rank1"] = rank1;
    auto roc_json = nlohmann::ordered_json::array();
    for (const RocPoint& p : roc) roc_json.push_back({p.far, p.tar});
    j["roc"] = std::move(roc_json);
    auto cmc_json = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cmc.size(); ++r) cmc_json.push_back({r + 1, cmc[r]});
    j["cmc"] = std::move(cmc_json);
    for (const auto& [name, hist] :
         {std::pair{"pos_angle_hist", &pos_angle_hist}, std::pair{"neg_angle_hist", &neg_angle_hist}}) {
        j[name] = {{"bin_edges", hist->bin_edges}, {"counts", hist->counts}};
    }
    return j.dump(2);
}

}  // namespace sphm
