#include "anostream/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "anostream/errors.hpp"

namespace anostream {

using nlohmann::json;

namespace {

constexpr int kCheckpointVersion = 1;

json config_to_json(const ModelConfig& c) {
    return json{{"d1", c.d1},
                {"d2", c.d2},
                {"q", c.q},
                {"h1", c.h1},
                {"h2", c.h2},
                {"omega", c.omega},
                {"lr", c.lr},
                {"max_epoch", c.max_epoch},
                {"checkpoint_every", c.checkpoint_every},
                {"seed", c.seed},
                {"coupling", to_string(c.coupling)},
                {"loss", to_string(c.loss_kind)},
                {"train_split", c.train_split}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.d1 = j.at("d1").get<int>();
    c.d2 = j.at("d2").get<int>();
    c.q = j.at("q").get<int>();
    c.h1 = j.at("h1").get<int>();
    c.h2 = j.at("h2").get<int>();
    c.omega = j.at("omega").get<double>();
    c.lr = j.at("lr").get<double>();
    c.max_epoch = j.at("max_epoch").get<int>();
    c.checkpoint_every = j.at("checkpoint_every").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.coupling = coupling_from_string(j.at("coupling").get<std::string>());
    c.loss_kind = loss_kind_from_string(j.at("loss").get<std::string>());
    c.train_split = j.value("train_split", 0.75);
    return c;
}

}  // namespace

void save_checkpoint(const std::string& path, const ClstmParams& params, int trained_epoch) {
    json doc;
    doc["version"] = kCheckpointVersion;
    doc["config"] = config_to_json(params.cfg);
    doc["epoch"] = trained_epoch;
    json tensors = json::object();
    auto list = tensor_list(params);
    for (std::size_t i = 0; i < list.size(); ++i) tensors[kTensorNames[i]] = *list[i];
    doc["tensors"] = std::move(tensors);

    std::ofstream f(path);
    if (!f) throw IoError("cannot write checkpoint: " + path);
    f << doc.dump() << '\n';
    if (!f) throw IoError("error while writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open checkpoint: " + path);
    json doc;
    try {
        f >> doc;
    } catch (const json::exception& e) {
        throw IoError("checkpoint " + path + ": malformed document: " + e.what());
    }
    try {
        const int version = doc.at("version").get<int>();
        if (version != kCheckpointVersion)
            throw IoError("checkpoint " + path + ": unsupported version " +
                          std::to_string(version));
        Checkpoint out;
        out.params = init_params(config_from_json(doc.at("config")));
        out.trained_epoch = doc.at("epoch").get<int>();
        const json& tensors = doc.at("tensors");
        auto list = tensor_list(out.params);
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Vec loaded = tensors.at(kTensorNames[i]).get<Vec>();
            if (loaded.size() != list[i]->size())
                throw IoError("checkpoint " + path + ": tensor " + kTensorNames[i] +
                              " has wrong length");
            for (double v : loaded)
                if (!std::isfinite(v))
                    throw IoError("checkpoint " + path + ": non-finite value in " +
                                  kTensorNames[i]);
            *list[i] = loaded;
        }
        return out;
    } catch (const json::exception& e) {
        throw IoError("checkpoint " + path + ": missing or invalid field: " + e.what());
    }
}

}  // namespace anostream
