#include "reso/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "reso/baselines.hpp"
#include "reso/json_conv.hpp"

namespace reso {

namespace {

constexpr char kMagic[4] = {'R', 'S', 'F', 'C'};

template <typename T>
void write_le(std::ostream& os, T v) {
    // host is little-endian on every supported target
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw FormatError("checkpoint truncated while reading fixed header");
    return v;
}

} // namespace

void checkpoint_save(const std::string& path, const Checkpoint& ck) {
    nlohmann::json header;
    header["format_version"] = Checkpoint::kVersion;
    header["model"] = ck.model_kind;
    header["config"] = ck.config;
    header["norm"] = ck.norm;
    nlohmann::json table = nlohmann::json::array();
    for (const auto& [name, t] : ck.params)
        table.push_back({{"name", name}, {"shape", t.shape()}});
    header["params"] = table;
    const std::string hs = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) throw FormatError("cannot open checkpoint for writing: " + path);
    os.write(kMagic, 4);
    write_le<std::uint32_t>(os, Checkpoint::kVersion);
    write_le<std::uint64_t>(os, hs.size());
    os.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& [name, t] : ck.params)
        os.write(reinterpret_cast<const char*>(t.data().data()),
                 static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!os) throw FormatError("checkpoint write failed: " + path);
}

Checkpoint checkpoint_load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw FormatError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("bad checkpoint magic in " + path);
    const auto version = read_le<std::uint32_t>(is);
    if (version != Checkpoint::kVersion)
        throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                          " (expected " + std::to_string(Checkpoint::kVersion) + ")");
    const auto header_len = read_le<std::uint64_t>(is);
    std::string hs(header_len, '\0');
    is.read(hs.data(), static_cast<std::streamsize>(header_len));
    if (!is) throw FormatError("checkpoint truncated inside JSON header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    Checkpoint ck;
    try {
        ck.model_kind = header.at("model").get<std::string>();
        ck.config = header.at("config").get<ModelConfig>();
        ck.norm = header.at("norm").get<NormStats>();
        for (const auto& entry : header.at("params")) {
            const auto name = entry.at("name").get<std::string>();
            const auto shape = entry.at("shape").get<Shape>();
            std::vector<float> data(numel(shape));
            is.read(reinterpret_cast<char*>(data.data()),
                    static_cast<std::streamsize>(data.size() * sizeof(float)));
            if (!is)
                throw FormatError("checkpoint blob for '" + name +
                                  "' shorter than header-declared shape " + shape_str(shape));
            ck.params.emplace_back(name, Tensor::from_data(shape, std::move(data)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("checkpoint header missing field: ") + e.what());
    }
    // no trailing bytes allowed
    is.peek();
    if (!is.eof()) throw FormatError("checkpoint has trailing bytes after declared blobs: " + path);
    return ck;
}

Checkpoint snapshot(Forecaster<float>& model, const NormStats& norm) {
    Checkpoint ck;
    ck.model_kind = model.kind();
    ck.config = model.config();
    ck.norm = norm;
    for (auto& [name, t] : model.params())
        ck.params.emplace_back(name, Tensor::from_data(t.shape(), t.data()));
    return ck;
}

std::unique_ptr<Forecaster<float>> model_from_checkpoint(const Checkpoint& ck) {
    Rng rng(0);
    auto model = make_model<float>(ck.model_kind, ck.config, rng);
    auto live = model->params();
    if (live.size() != ck.params.size())
        throw FormatError("checkpoint parameter count " + std::to_string(ck.params.size()) +
                          " does not match model '" + ck.model_kind + "' (" +
                          std::to_string(live.size()) + ")");
    for (size_t i = 0; i < live.size(); ++i) {
        const auto& [stored_name, stored] = ck.params[i];
        auto& [name, t] = live[i];
        if (name != stored_name)
            throw FormatError("checkpoint parameter '" + stored_name + "' where model expects '" +
                              name + "'");
        if (t.shape() != stored.shape())
            throw FormatError("checkpoint parameter '" + name + "' shape " +
                              shape_str(stored.shape()) + " does not match model shape " +
                              shape_str(t.shape()));
        t.data() = stored.data();
    }
    return model;
}

} // namespace reso
