#include "sphm/dataio.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "sphm/angular.hpp"
#include "sphm/rng.hpp"

namespace sphm {

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

double angle_between(std::span<const double> a, std::span<const double> b) {
    const double c = dot(a, b) / (norm(a) * norm(b));
    return std::acos(std::clamp(c, -1.0, 1.0));
}

// Unit vector orthogonal to `center`, direction drawn from rng.
std::vector<double> random_orthogonal(Rng& rng, std::span<const double> center) {
    const std::size_t d = center.size();
    std::vector<double> u(d);
    for (;;) {
        for (double& v : u) v = rng.normal();
        const double proj = dot(u, center);
        for (std::size_t i = 0; i < d; ++i) u[i] -= proj * center[i];
        const double n = norm(u);
        if (n > 1e-9) {
            for (double& v : u) v /= n;
            return u;
        }
    }
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return bytes;
}

class BigEndianReader {
public:
    BigEndianReader(std::span<const std::uint8_t> bytes, std::string name)
        : bytes_(bytes), name_(std::move(name)) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[offset_ + i];
        offset_ += 4;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        require(n);
        auto s = bytes_.subspan(offset_, n);
        offset_ += n;
        return s;
    }

    std::size_t offset() const { return offset_; }

    void expect_eof() const {
        if (offset_ != bytes_.size())
            throw std::runtime_error(name_ + ": " + std::to_string(bytes_.size() - offset_) +
                                     " unexpected trailing bytes at offset " +
                                     std::to_string(offset_));
    }

private:
    void require(std::size_t n) const {
        if (offset_ + n > bytes_.size())
            throw std::runtime_error(name_ + ": truncated at byte offset " +
                                     std::to_string(bytes_.size()) + " (needed " +
                                     std::to_string(offset_ + n) + ")");
    }

    std::span<const std::uint8_t> bytes_;
    std::string name_;
    std::size_t offset_ = 0;
};

void append_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
}

void write_file_bytes(const std::filesystem::path& path,
                      std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void LabeledBatch::validate() const {
    if (labels.size() != features.rows())
        throw std::invalid_argument("LabeledBatch: " + std::to_string(labels.size()) +
                                    " labels for " + std::to_string(features.rows()) + " rows");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= class_count)
            throw std::invalid_argument("LabeledBatch: label " + std::to_string(labels[i]) +
                                        " at row " + std::to_string(i) + " outside [0, " +
                                        std::to_string(class_count) + ")");
}

void SyntheticSpec::validate() const {
    if (k_classes < 2) throw std::invalid_argument("SyntheticSpec: k_classes must be >= 2");
    if (per_class < 1) throw std::invalid_argument("SyntheticSpec: per_class must be >= 1");
    if (dim < 2) throw std::invalid_argument("SyntheticSpec: dim must be >= 2");
    if (!(angular_spread > 0.0 && angular_spread < kPi / 2))
        throw std::invalid_argument("SyntheticSpec: angular_spread must lie in (0, pi/2)");
    if (!(radius_jitter >= 0.0 && radius_jitter < 1.0))
        throw std::invalid_argument("SyntheticSpec: radius_jitter must lie in [0, 1)");
}

SynthBlobs synth_blobs_full(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    SynthBlobs out;
    out.centers = Matrix(spec.k_classes, spec.dim);
    double min_separation = kPi;
    if (spec.dim == 2) {
        for (std::size_t j = 0; j < spec.k_classes; ++j) {
            const double a = 2.0 * kPi * static_cast<double>(j) /
                             static_cast<double>(spec.k_classes);
            out.centers(j, 0) = std::cos(a);
            out.centers(j, 1) = std::sin(a);
        }
        min_separation = 2.0 * kPi / static_cast<double>(spec.k_classes);
    } else {
        // Greedy placement: keep drawing random directions until the new
        // center clears every accepted one by target_sep, falling back to the
        // best candidate seen when the sphere gets crowded.
        const double target_sep = std::min(2.0 * spec.angular_spread + 0.05, kPi / 2);
        for (std::size_t j = 0; j < spec.k_classes; ++j) {
            std::vector<double> best;
            double best_min_angle = -1.0;
            for (int attempt = 0; attempt < 200; ++attempt) {
                std::vector<double> cand(spec.dim);
                for (double& v : cand) v = rng.normal();
                const double n = norm(cand);
                if (n < 1e-9) continue;
                for (double& v : cand) v /= n;
                double min_angle = kPi;
                for (std::size_t p = 0; p < j; ++p)
                    min_angle = std::min(min_angle, angle_between(cand, out.centers.row(p)));
                if (min_angle > best_min_angle) {
                    best_min_angle = min_angle;
                    best = cand;
                }
                if (min_angle >= target_sep) break;
            }
            for (std::size_t l = 0; l < spec.dim; ++l) out.centers(j, l) = best[l];
            if (j > 0) min_separation = std::min(min_separation, best_min_angle);
        }
    }
    if (2.0 * spec.angular_spread > min_separation) {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "angular_spread %.4f exceeds half the minimum center separation %.4f; "
                      "classes may overlap",
                      spec.angular_spread, min_separation);
        out.warning = buf;
    }

    const std::size_t n = spec.k_classes * spec.per_class;
    out.batch.features = Matrix(n, spec.dim);
    out.batch.labels.resize(n);
    out.batch.class_count = spec.k_classes;
    std::size_t row = 0;
    for (std::size_t j = 0; j < spec.k_classes; ++j) {
        const auto center = out.centers.row(j);
        for (std::size_t s = 0; s < spec.per_class; ++s, ++row) {
            const std::vector<double> u = random_orthogonal(rng, center);
            const double alpha = spec.angular_spread * rng.uniform();
            const double scale = 1.0 + spec.radius_jitter * rng.uniform(-1.0, 1.0);
            const double ca = std::cos(alpha), sa = std::sin(alpha);
            for (std::size_t l = 0; l < spec.dim; ++l)
                out.batch.features(row, l) = scale * (ca * center[l] + sa * u[l]);
            out.batch.labels[row] = static_cast<int>(j);
        }
    }
    return out;
}

LabeledBatch synth_blobs(const SyntheticSpec& spec) {
    return synth_blobs_full(spec).batch;
}

IdxData read_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    const auto image_bytes = read_file_bytes(images_path);
    BigEndianReader images(image_bytes, images_path.string());
    IdxData data;
    const std::uint32_t magic = images.u32();
    if (magic != kImagesMagic)
        throw std::runtime_error(images_path.string() + ": bad magic 0x" +
                                 [&] { char b[16]; std::snprintf(b, 16, "%08" PRIx32, magic); return std::string(b); }() +
                                 " at byte offset 0 (expected 0x00000803)");
    data.count = images.u32();
    data.rows = images.u32();
    data.cols = images.u32();
    const std::size_t pixel_count =
        static_cast<std::size_t>(data.count) * data.rows * data.cols;
    const auto pixels = images.take(pixel_count);
    images.expect_eof();
    data.pixels.assign(pixels.begin(), pixels.end());

    const auto label_bytes = read_file_bytes(labels_path);
    BigEndianReader labels(label_bytes, labels_path.string());
    const std::uint32_t label_magic = labels.u32();
    if (label_magic != kLabelsMagic)
        throw std::runtime_error(labels_path.string() + ": bad magic at byte offset 0 (expected 0x00000801)");
    const std::uint32_t label_count = labels.u32();
    if (label_count != data.count)
        throw std::runtime_error(labels_path.string() + ": " + std::to_string(label_count) +
                                 " labels but " + std::to_string(data.count) +
                                 " images (count field at byte offset 4)");
    const auto lbl = labels.take(label_count);
    labels.expect_eof();
    data.labels.assign(lbl.begin(), lbl.end());
    return data;
}

void write_idx(const IdxData& data, const std::filesystem::path& images_path,
               const std::filesystem::path& labels_path) {
    if (data.pixels.size() != static_cast<std::size_t>(data.count) * data.rows * data.cols)
        throw std::invalid_argument("write_idx: pixel buffer does not match declared dimensions");
    if (data.labels.size() != data.count)
        throw std::invalid_argument("write_idx: label buffer does not match declared count");

    std::vector<std::uint8_t> images;
    images.reserve(16 + data.pixels.size());
    append_u32_be(images, kImagesMagic);
    append_u32_be(images, data.count);
    append_u32_be(images, data.rows);
    append_u32_be(images, data.cols);
    images.insert(images.end(), data.pixels.begin(), data.pixels.end());
    write_file_bytes(images_path, images);

    std::vector<std::uint8_t> labels;
    labels.reserve(8 + data.labels.size());
    append_u32_be(labels, kLabelsMagic);
    append_u32_be(labels, data.count);
    labels.insert(labels.end(), data.labels.begin(), data.labels.end());
    write_file_bytes(labels_path, labels);
}

LabeledBatch idx_to_batch(const IdxData& data) {
    LabeledBatch batch;
    const std::size_t d = static_cast<std::size_t>(data.rows) * data.cols;
    batch.features = Matrix(data.count, d);
    batch.labels.resize(data.count);
    int max_label = 0;
    for (std::size_t i = 0; i < data.count; ++i) {
        for (std::size_t p = 0; p < d; ++p)
            batch.features(i, p) = (static_cast<double>(data.pixels[i * d + p]) - 127.5) / 128.0;
        batch.labels[i] = data.labels[i];
        max_label = std::max(max_label, static_cast<int>(data.labels[i]));
    }
    batch.class_count = data.count == 0 ? 0 : static_cast<std::size_t>(max_label) + 1;
    return batch;
}

LabeledBatch load_idx(const std::filesystem::path& images_path,
                      const std::filesystem::path& labels_path) {
    return idx_to_batch(read_idx(images_path, labels_path));
}

void export_features(const Matrix& features, std::span<const int> labels,
                     const std::filesystem::path& path) {
    if (labels.size() != features.rows())
        throw std::invalid_argument("export_features: label count does not match rows");
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "label";
    for (std::size_t j = 0; j < features.cols(); ++j) out << ",f" << j;
    out << "\n";
    char buf[40];
    for (std::size_t i = 0; i < features.rows(); ++i) {
        out << labels[i];
        for (std::size_t j = 0; j < features.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", features(i, j));
            out << ',' << buf;
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

LabeledBatch import_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
    std::size_t d = 0;
    for (char ch : line)
        if (ch == ',') ++d;

    std::vector<double> values;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        labels.push_back(static_cast<int>(std::strtol(p, &end, 10)));
        for (std::size_t j = 0; j < d; ++j) {
            if (*end != ',')
                throw std::runtime_error(path.string() + ": malformed row " +
                                         std::to_string(labels.size()));
            p = end + 1;
            values.push_back(std::strtod(p, &end));
        }
    }
    LabeledBatch batch;
    batch.features = Matrix(labels.size(), d);
    batch.features.data() = std::move(values);
    batch.labels = std::move(labels);
    int max_label = -1;
    for (int l : batch.labels) max_label = std::max(max_label, l);
    batch.class_count = static_cast<std::size_t>(max_label + 1);
    return batch;
}

}  // namespace sphm
