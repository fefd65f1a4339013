#include "edit_suggest/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

namespace {

using nlohmann::ordered_json;

ordered_json model_config_json(const ModelConfig& c)
{
    return {{"x_dim", c.x_dim},
            {"y_dim", c.y_dim},
            {"latent_dim", c.latent_dim},
            {"components", c.components},
            {"hidden", c.hidden},
            {"activation", to_string(c.activation)},
            {"init_scale", c.init_scale},
            {"prior_spread", c.prior_spread}};
}

ModelConfig model_config_from(const ordered_json& j)
{
    ModelConfig c;
    j.at("x_dim").get_to(c.x_dim);
    j.at("y_dim").get_to(c.y_dim);
    j.at("latent_dim").get_to(c.latent_dim);
    j.at("components").get_to(c.components);
    j.at("hidden").get_to(c.hidden);
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    j.at("init_scale").get_to(c.init_scale);
    j.at("prior_spread").get_to(c.prior_spread);
    c.validate();
    return c;
}

ordered_json baseline_config_json(const BaselineConfig& c)
{
    return {{"x_dim", c.x_dim},
            {"y_dim", c.y_dim},
            {"hidden", c.hidden},
            {"activation", to_string(c.activation)},
            {"init_scale", c.init_scale}};
}

BaselineConfig baseline_config_from(const ordered_json& j)
{
    BaselineConfig c;
    j.at("x_dim").get_to(c.x_dim);
    j.at("y_dim").get_to(c.y_dim);
    j.at("hidden").get_to(c.hidden);
    c.activation = activation_from_string(j.at("activation").get<std::string>());
    j.at("init_scale").get_to(c.init_scale);
    return c;
}

ordered_json train_config_json(const TrainConfig& t)
{
    return {{"epochs", t.epochs},
            {"batch_size", t.batch_size},
            {"user_batch_size", t.user_batch_size},
            {"seed", t.seed},
            {"learning_rate", t.adam.learning_rate},
            {"beta1", t.adam.beta1},
            {"beta2", t.adam.beta2},
            {"epsilon", t.adam.epsilon},
            {"latent_dim", t.latent_dim},
            {"components", t.components},
            {"hidden", t.hidden},
            {"activation", to_string(t.activation)},
            {"init_scale", t.init_scale},
            {"prior_spread", t.prior_spread},
            {"warmup_epochs", t.warmup_epochs}};
}

TrainConfig train_config_from(const ordered_json& j)
{
    TrainConfig t;
    j.at("epochs").get_to(t.epochs);
    j.at("batch_size").get_to(t.batch_size);
    j.at("user_batch_size").get_to(t.user_batch_size);
    j.at("seed").get_to(t.seed);
    j.at("learning_rate").get_to(t.adam.learning_rate);
    j.at("beta1").get_to(t.adam.beta1);
    j.at("beta2").get_to(t.adam.beta2);
    j.at("epsilon").get_to(t.adam.epsilon);
    j.at("latent_dim").get_to(t.latent_dim);
    j.at("components").get_to(t.components);
    j.at("hidden").get_to(t.hidden);
    t.activation = activation_from_string(j.at("activation").get<std::string>());
    j.at("init_scale").get_to(t.init_scale);
    j.at("prior_spread").get_to(t.prior_spread);
    j.at("warmup_epochs").get_to(t.warmup_epochs);
    return t;
}

ordered_json config_echo(const AnyModel& model)
{
    return std::visit(
        [](const auto& m) -> ordered_json {
            using M = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<M, MdnModel>) {
                auto j = baseline_config_json(m.config);
                j["mixtures"] = m.mixtures;
                return j;
            } else if constexpr (std::is_same_v<M, GaussianMlpModel>) {
                return baseline_config_json(m.config);
            } else {
                return model_config_json(m.config);
            }
        },
        model);
}

AnyModel rebuild(ModelKind kind, const ordered_json& cfg)
{
    switch (kind) {
    case ModelKind::cgm_vae:
        return CgmVaeModel::init(model_config_from(cfg), 0);
    case ModelKind::cgm_svae:
        return CgmSvaeModel::init(model_config_from(cfg), 0);
    case ModelKind::mlp:
        return GaussianMlpModel::init(baseline_config_from(cfg), 0);
    case ModelKind::mdn:
        return MdnModel::init(baseline_config_from(cfg), cfg.at("mixtures").get<std::size_t>(), 0);
    }
    throw CheckpointError("unknown model kind");
}

std::vector<NamedTensor> named_of(AnyModel& m)
{
    return std::visit([](auto& model) { return model.named_parameters(); }, m);
}

std::string shape_text(const std::vector<std::size_t>& s)
{
    std::string out = "[";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += (i ? "," : "") + std::to_string(s[i]);
    }
    return out + "]";
}

ordered_json header_json(const Checkpoint& ck)
{
    ordered_json j;
    j["model_kind"] = to_string(kind_of(ck.model));
    j["config"] = config_echo(ck.model);
    j["train"] = train_config_json(ck.train);
    return j;
}

}  // namespace

std::string to_string(ModelKind k)
{
    switch (k) {
    case ModelKind::cgm_vae:
        return "cgm-vae";
    case ModelKind::cgm_svae:
        return "cgm-svae";
    case ModelKind::mlp:
        return "mlp";
    case ModelKind::mdn:
        return "mdn";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& s)
{
    for (auto k : {ModelKind::cgm_vae, ModelKind::cgm_svae, ModelKind::mlp, ModelKind::mdn}) {
        if (to_string(k) == s) {
            return k;
        }
    }
    throw ConfigError("unknown model kind '" + s + "' (expected cgm-vae, cgm-svae, mlp or mdn)");
}

ModelKind kind_of(const AnyModel& m) { return static_cast<ModelKind>(m.index()); }

std::string config_hash(const Checkpoint& ck)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a(header_json(ck).dump())));
    return buf;
}

std::string checkpoint_to_json(const Checkpoint& ck)
{
    auto j = ordered_json::object();
    j["version"] = kCheckpointVersion;
    const auto header = header_json(ck);
    for (const auto& [k, v] : header.items()) {
        j[k] = v;
    }
    j["config_hash"] = config_hash(ck);
    j["seed"] = ck.seed;
    j["dataset"] = ck.dataset_id;
    auto model = ck.model;
    auto& tensors = j["tensors"];
    tensors = ordered_json::array();
    for (const auto& nt : named_of(model)) {
        tensors.push_back({{"name", nt.name},
                           {"shape", nt.tensor->shape()},
                           {"values", nt.tensor->storage()}});
    }
    auto& log = j["training_log"];
    log = ordered_json::array();
    for (const auto& e : ck.log) {
        log.push_back({{"epoch", e.epoch}, {"train_elbo", e.train_objective}, {"val_elbo", e.val_objective}});
    }
    j["best_epoch"] = ck.best_epoch;
    return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text)
{
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
    try {
        const auto version = j.at("version").get<std::string>();
        if (version != kCheckpointVersion) {
            throw CheckpointError("checkpoint version '" + version + "' is not supported (expected " +
                                  kCheckpointVersion + ")");
        }
        const auto kind = model_kind_from_string(j.at("model_kind").get<std::string>());
        Checkpoint ck{rebuild(kind, j.at("config")), train_config_from(j.at("train")),
                      j.at("seed").get<std::uint64_t>(), j.value("dataset", std::string{}), {}, 0};
        auto named = named_of(ck.model);
        const auto& tensors = j.at("tensors");
        if (tensors.size() != named.size()) {
            throw CheckpointError("checkpoint has " + std::to_string(tensors.size()) +
                                  " tensors, config implies " + std::to_string(named.size()));
        }
        for (std::size_t i = 0; i < named.size(); ++i) {
            const auto& t = tensors[i];
            const auto name = t.at("name").get<std::string>();
            if (name != named[i].name) {
                throw CheckpointError("tensor " + std::to_string(i) + " is '" + name +
                                      "', expected '" + named[i].name + "'");
            }
            const auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (shape != named[i].tensor->shape()) {
                throw CheckpointError("tensor '" + name + "' has shape " + shape_text(shape) +
                                      ", config implies " + shape_text(named[i].tensor->shape()));
            }
            auto values = t.at("values").get<std::vector<double>>();
            if (values.size() != named[i].tensor->size()) {
                throw CheckpointError("tensor '" + name + "' has " + std::to_string(values.size()) +
                                      " values for shape " + shape_text(shape));
            }
            *named[i].tensor = Tensor(shape, std::move(values));
        }
        for (const auto& e : j.at("training_log")) {
            ck.log.push_back({e.at("epoch").get<std::size_t>(), e.at("train_elbo").get<double>(),
                              e.at("val_elbo").get<double>()});
        }
        ck.best_epoch = j.value("best_epoch", std::size_t{0});
        if (j.contains("config_hash") && j["config_hash"].get<std::string>() != config_hash(ck)) {
            throw CheckpointError("config_hash does not match the stored configuration");
        }
        return ck;
    } catch (const ordered_json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) {
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        }
        f << text;
        f.flush();
        if (!f) {
            throw std::runtime_error("failed writing " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw std::runtime_error("cannot read " + path.string());
    }
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path)
{
    write_file_atomic(path, checkpoint_to_json(ck));
}

Checkpoint load_checkpoint(const std::filesystem::path& path)
{
    return checkpoint_from_json(read_file(path));
}

}  // namespace edit_suggest
