#include "sphm/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace sphm {

namespace {

static_assert(std::numeric_limits<double>::is_iec559, "requires IEEE-754 doubles");

using json = nlohmann::ordered_json;

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64_array(std::vector<std::uint8_t>& out, std::span<const double> values) {
    append_u64(out, values.size());
    for (double d : values) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        append_u64(out, bits);
    }
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[offset_ + i]) << (8 * i);
        offset_ += 4;
        return v;
    }

    std::uint64_t u64() {
        require(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[offset_ + i]) << (8 * i);
        offset_ += 8;
        return v;
    }

    std::span<const std::uint8_t> take(std::size_t n) {
        require(n);
        auto s = bytes_.subspan(offset_, n);
        offset_ += n;
        return s;
    }

    std::vector<double> f64_array() {
        const std::uint64_t count = u64();
        std::vector<double> values(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::uint64_t bits = u64();
            std::memcpy(&values[i], &bits, 8);
        }
        return values;
    }

    std::size_t offset() const { return offset_; }

    void expect_eof() const {
        if (offset_ != bytes_.size())
            throw std::runtime_error("checkpoint: " + std::to_string(bytes_.size() - offset_) +
                                     " trailing bytes at offset " + std::to_string(offset_));
    }

private:
    void require(std::size_t n) const {
        if (offset_ + n > bytes_.size())
            throw std::runtime_error("checkpoint: truncated at byte offset " +
                                     std::to_string(bytes_.size()) + " (needed " +
                                     std::to_string(offset_ + n) + ")");
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t offset_ = 0;
};

json shape_entry(const std::string& name, std::size_t rows, std::size_t cols) {
    return json{{"name", name}, {"rows", rows}, {"cols", cols}};
}

}  // namespace

std::vector<std::uint8_t> checkpoint_serialize(const ModelState& state) {
    json header;
    header["embedder"] = {{"layer_widths", state.config.layer_widths},
                          {"activation", state.config.activation},
                          {"seed", std::to_string(state.config.seed)}};
    header["k_classes"] = state.classifier.cols();
    header["iteration"] = state.iteration;
    header["anneal_iteration"] = state.anneal.iteration;
    json arrays = json::array();
    for (std::size_t l = 0; l < state.layers.size(); ++l) {
        const auto tag = "layer" + std::to_string(l);
        arrays.push_back(shape_entry(tag + ".weight", state.layers[l].weight.rows(),
                                     state.layers[l].weight.cols()));
        arrays.push_back(shape_entry(tag + ".bias", 1, state.layers[l].bias.size()));
    }
    arrays.push_back(shape_entry("classifier", state.classifier.rows(),
                                 state.classifier.cols()));
    arrays.push_back(shape_entry("anneal.lambda", 1, 1));
    header["arrays"] = std::move(arrays);

    const std::string header_text = header.dump();
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'S', 'P', 'H', 'M'});
    append_u32(out, kCheckpointVersion);
    append_u64(out, header_text.size());
    out.insert(out.end(), header_text.begin(), header_text.end());
    for (const DenseLayer& layer : state.layers) {
        append_f64_array(out, layer.weight.data());
        append_f64_array(out, layer.bias);
    }
    append_f64_array(out, state.classifier.data());
    const double lambda[1] = {state.anneal.lambda};
    append_f64_array(out, lambda);
    return out;
}

ModelState checkpoint_deserialize(std::span<const std::uint8_t> bytes) {
    Reader reader(bytes);
    const auto magic = reader.take(4);
    if (!(magic[0] == 'S' && magic[1] == 'P' && magic[2] == 'H' && magic[3] == 'M'))
        throw std::runtime_error("checkpoint: bad magic at byte offset 0 (expected \"SPHM\")");
    const std::uint32_t version = reader.u32();
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported format version " +
                                 std::to_string(version) + " at byte offset 4 (expected " +
                                 std::to_string(kCheckpointVersion) + ")");
    const std::uint64_t header_len = reader.u64();
    const auto header_bytes = reader.take(header_len);

    json header;
    try {
        header = json::parse(header_bytes.begin(), header_bytes.end());
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: malformed JSON header: ") + e.what());
    }

    ModelState state;
    try {
        state.config.layer_widths =
            header.at("embedder").at("layer_widths").get<std::vector<std::size_t>>();
        state.config.activation = header.at("embedder").at("activation").get<std::string>();
        state.config.seed = std::stoull(header.at("embedder").at("seed").get<std::string>());
        state.iteration = header.at("iteration").get<std::uint64_t>();
        state.anneal.iteration = header.at("anneal_iteration").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("checkpoint: header field error: ") + e.what());
    }
    state.config.validate();
    const auto k_classes = header.at("k_classes").get<std::size_t>();

    const json& arrays = header.at("arrays");
    const std::size_t expected_arrays = 2 * (state.config.layer_widths.size() - 1) + 2;
    if (arrays.size() != expected_arrays)
        throw std::runtime_error("checkpoint: header declares " + std::to_string(arrays.size()) +
                                 " arrays, expected " + std::to_string(expected_arrays));

    auto read_shaped = [&](const json& entry) {
        const auto rows = entry.at("rows").get<std::size_t>();
        const auto cols = entry.at("cols").get<std::size_t>();
        const std::size_t at = reader.offset();
        std::vector<double> values = reader.f64_array();
        if (values.size() != rows * cols)
            throw std::runtime_error("checkpoint: array '" +
                                     entry.at("name").get<std::string>() + "' at byte offset " +
                                     std::to_string(at) + " has " +
                                     std::to_string(values.size()) + " values, header says " +
                                     std::to_string(rows) + "x" + std::to_string(cols));
        Matrix m(rows, cols);
        m.data() = std::move(values);
        return m;
    };

    std::size_t idx = 0;
    for (std::size_t l = 0; l + 1 < state.config.layer_widths.size(); ++l) {
        DenseLayer layer;
        layer.weight = read_shaped(arrays[idx++]);
        if (layer.weight.rows() != state.config.layer_widths[l] ||
            layer.weight.cols() != state.config.layer_widths[l + 1])
            throw std::runtime_error("checkpoint: layer " + std::to_string(l) +
                                     " weight shape disagrees with configured widths");
        const Matrix bias = read_shaped(arrays[idx++]);
        layer.bias = bias.data();
        if (layer.bias.size() != state.config.layer_widths[l + 1])
            throw std::runtime_error("checkpoint: layer " + std::to_string(l) +
                                     " bias length disagrees with configured widths");
        state.layers.push_back(std::move(layer));
    }
    state.classifier = read_shaped(arrays[idx++]);
    if (state.classifier.rows() != state.config.embedding_dim() ||
        state.classifier.cols() != k_classes)
        throw std::runtime_error("checkpoint: classifier shape disagrees with header");
    const Matrix lambda = read_shaped(arrays[idx++]);
    state.anneal.lambda = lambda(0, 0);
    reader.expect_eof();
    return state;
}

void checkpoint_save(const ModelState& state, const std::filesystem::path& path) {
    const auto bytes = checkpoint_serialize(state);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

ModelState checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return checkpoint_deserialize(bytes);
}

}  // namespace sphm
