#include "yatnn/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "json.hpp"
#include "yatnn/errors.hpp"

namespace yatnn {

namespace {

constexpr char kMagic[8] = {'Y', 'A', 'T', 'C', 'K', 'P', 'T', '1'};

void write_u64_le(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64_le(std::istream& in, const std::string& path) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) {
        throw IoError("truncated checkpoint " + path);
    }
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}

void write_doubles_le(std::ostream& out, const double* data, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) {
        write_u64_le(out, std::bit_cast<std::uint64_t>(data[i]));
    }
}

void read_doubles_le(std::istream& in, double* data, std::size_t count,
                     const std::string& path) {
    for (std::size_t i = 0; i < count; ++i) {
        data[i] = std::bit_cast<double>(read_u64_le(in, path));
    }
}

struct ManifestView {
    nlohmann::json json;
    std::streampos payload_start;
};

ManifestView read_manifest(std::ifstream& in, const std::string& path) {
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
        throw FormatError("not a yatnn checkpoint: " + path);
    }
    const std::uint64_t len = read_u64_le(in, path);
    std::string manifest(len, '\0');
    if (!in.read(manifest.data(), static_cast<std::streamsize>(len))) {
        throw IoError("truncated checkpoint manifest in " + path);
    }
    return {nlohmann::json::parse(manifest), in.tellg()};
}

}  // namespace

void save_checkpoint(Model& model, const std::string& path) {
    nlohmann::json manifest;
    manifest["format"] = "yatnn-checkpoint";
    manifest["version"] = 1;
    manifest["config"] = nlohmann::json::parse(model_config_to_json(model.config()));
    manifest["head"] = head_name(model.head());
    manifest["bias_in_head"] = model.bias_in_head();
    manifest["dropout_rate"] = model.dropout_rate();
    manifest["tensors"] = nlohmann::json::array();
    auto tensors = model.params();
    for (const auto& t : tensors) {
        manifest["tensors"].push_back({{"name", t.name},
                                       {"size", t.size},
                                       {"rows", t.rows},
                                       {"cols", t.cols}});
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, 8);
    const std::string text = manifest.dump();
    write_u64_le(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& t : tensors) write_doubles_le(out, t.value, t.size);
    if (!out) throw IoError("failed writing checkpoint " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto view = read_manifest(in, path);
    const auto& j = view.json;
    if (j.value("version", 0) != 1) {
        throw FormatError("unsupported checkpoint version in " + path);
    }
    ModelConfig cfg = model_config_from_json(j.at("config").dump());
    RngState rng{0, 0};
    auto model = make_model(cfg, head_from_name(j.at("head").get<std::string>()),
                            j.at("bias_in_head").get<bool>(),
                            j.at("dropout_rate").get<double>(), rng);
    auto tensors = model->params();
    const auto& table = j.at("tensors");
    if (table.size() != tensors.size()) {
        throw ConsistencyError("checkpoint tensor table does not match model layout");
    }
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        if (table[i].at("name").get<std::string>() != tensors[i].name ||
            table[i].at("size").get<std::size_t>() != tensors[i].size) {
            throw ConsistencyError("checkpoint tensor '" +
                                   table[i].at("name").get<std::string>() +
                                   "' does not match model layout");
        }
        read_doubles_le(in, tensors[i].value, tensors[i].size, path);
    }
    return model;
}

std::vector<std::string> checkpoint_tensor_names(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto view = read_manifest(in, path);
    std::vector<std::string> names;
    for (const auto& t : view.json.at("tensors")) {
        names.push_back(t.at("name").get<std::string>());
    }
    return names;
}

Matrix checkpoint_layer_kernel(const std::string& path, const std::string& layer) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    auto view = read_manifest(in, path);
    std::uint64_t offset = 0;
    for (const auto& t : view.json.at("tensors")) {
        const auto name = t.at("name").get<std::string>();
        const auto size = t.at("size").get<std::uint64_t>();
        if (name == layer || name == layer + ".kernel") {
            const auto rows = t.at("rows").get<std::size_t>();
            const auto cols = t.at("cols").get<std::size_t>();
            if (rows == 0 || cols == 0) {
                throw ConsistencyError("tensor '" + name + "' is not a kernel matrix");
            }
            in.seekg(view.payload_start + static_cast<std::streamoff>(offset * 8));
            Matrix m(rows, cols);
            read_doubles_le(in, m.data.data(), m.size(), path);
            return m;
        }
        offset += size;
    }
    throw ConsistencyError("no layer named '" + layer + "' in checkpoint " + path);
}

}  // namespace yatnn
