#include "machan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace machan {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

json config_to_json(const ModelConfig &config) {
    json channels = json::array();
    for (std::size_t c = 0; c < kChannelCount; ++c)
        if (config.channels[c]) channels.push_back(std::string(kChannelNames[c]));
    return {
        {"input_dims", {config.input_dims[0], config.input_dims[1], config.input_dims[2]}},
        {"align_dim", config.align_dim},
        {"attention_dim", config.attention_dim},
        {"state_dim", config.state_dim},
        {"fusion", to_string(config.fusion)},
        {"tie_break", "lowest_index"},
        {"head", to_string(config.head)},
        {"channels", channels},
    };
}

ModelConfig config_from_json(const json &j) {
    ModelConfig c;
    auto dims = j.at("input_dims").get<std::vector<std::size_t>>();
    if (dims.size() != kChannelCount) throw FormatError("input_dims must list three extents");
    for (std::size_t i = 0; i < kChannelCount; ++i) c.input_dims[i] = dims[i];
    c.align_dim = j.at("align_dim").get<std::size_t>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.state_dim = j.at("state_dim").get<std::size_t>();
    c.fusion = parse_fusion(j.at("fusion").get<std::string>());
    if (j.value("tie_break", std::string("lowest_index")) != "lowest_index") throw FormatError("unknown tie_break");
    c.head = parse_head(j.value("head", std::string("last")));
    c.channels = {false, false, false};
    for (const auto &name : j.at("channels")) {
        auto s = name.get<std::string>();
        bool found = false;
        for (std::size_t i = 0; i < kChannelCount; ++i)
            if (s == kChannelNames[i]) c.channels[i] = found = true;
        if (!found) throw FormatError("unknown channel " + s);
    }
    c.validate();
    return c;
}

void save_checkpoint(const std::filesystem::path &path, const ModelParams &params,
                     const std::optional<Normalizer> &normalizer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + path.string());
    json header = {{"config", config_to_json(params.config)}, {"tensors", params.set.size()}};
    header["normalizer"] = normalizer ? json{{"mean", normalizer->mean}, {"stddev", normalizer->stddev}} : json(nullptr);
    out << kCheckpointMagic << '\n' << header.dump() << '\n';
    for (std::size_t id = 0; id < params.set.size(); ++id) {
        const auto &t = params.set[id];
        out << params.set.name(id) << ' ' << t.rank();
        for (auto e : t.shape()) out << ' ' << e;
        out << '\n';
        out.write(reinterpret_cast<const char *>(t.values().data()),
                  static_cast<std::streamsize>(t.size() * sizeof(double)));
        out << '\n';
    }
    if (!out) throw FormatError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kCheckpointMagic)
        throw FormatError(path.string() + ": missing " + std::string(kCheckpointMagic) + " header");
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing config line");

    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception &e) {
        throw FormatError(path.string() + ": bad config line: " + e.what());
    }

    Checkpoint ck;
    ck.params = ModelParams::zeros(config_from_json(header.at("config")));
    if (!header.at("normalizer").is_null()) {
        const auto &n = header["normalizer"];
        ck.normalizer = Normalizer{n.at("mean").get<double>(), n.at("stddev").get<double>()};
    }
    const auto count = header.at("tensors").get<std::size_t>();
    if (count != ck.params.set.size())
        throw FormatError(path.string() + ": stores " + std::to_string(count) + " tensors, layout has " +
                          std::to_string(ck.params.set.size()));

    for (std::size_t id = 0; id < count; ++id) {
        if (!std::getline(in, line)) throw FormatError(path.string() + ": truncated tensor header");
        std::istringstream hs(line);
        std::string name;
        std::size_t rank = 0;
        hs >> name >> rank;
        Shape shape(rank);
        for (auto &e : shape) hs >> e;
        if (!hs || name != ck.params.set.name(id) || shape != ck.params.set[id].shape())
            throw FormatError(path.string() + ": tensor " + std::to_string(id) + " does not match layout (" + line + ")");
        std::vector<double> values(element_count(shape));
        in.read(reinterpret_cast<char *>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(double)));
        if (!in || in.get() != '\n') throw FormatError(path.string() + ": truncated data for " + name);
        try {
            ck.params.set[id] = Tensor(std::move(shape), std::move(values));
        } catch (const NonFiniteError &e) {
            throw FormatError(path.string() + ": " + name + ": " + e.what());
        }
    }
    return ck;
}

}  // namespace machan
