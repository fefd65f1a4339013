#include "edit_suggest/synthdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "edit_suggest/rng.hpp"

namespace edit_suggest {

namespace {

using nlohmann::json;

void require(bool ok, const std::string& msg)
{
    if (!ok) {
        throw ConfigError("GenConfig: " + msg);
    }
}

void check_matrix(const Matrix& m, std::size_t rows, std::size_t cols, const std::string& what)
{
    require(m.size() == rows, what + " must have " + std::to_string(rows) + " rows");
    for (const auto& r : m) {
        require(r.size() == cols, what + " rows must have " + std::to_string(cols) + " entries");
        for (double v : r) {
            require(std::isfinite(v), what + " has a non-finite entry");
        }
    }
}

Matrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale)
{
    Matrix m(rows, std::vector<double>(cols));
    for (auto& r : m) {
        for (auto& v : r) {
            v = scale * rng.normal();
        }
    }
    return m;
}

Eigen::MatrixXd to_eigen(const Matrix& m)
{
    Eigen::MatrixXd out(m.size(), m.empty() ? 0 : m.front().size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m[i].size(); ++j) {
            out(i, j) = m[i][j];
        }
    }
    return out;
}

double logsumexp(const std::vector<double>& v)
{
    const double mx = *std::max_element(v.begin(), v.end());
    double s = 0.0;
    for (double t : v) {
        s += std::exp(t - mx);
    }
    return mx + std::log(s);
}

struct PresetShape {
    std::size_t users_per_group;
    std::size_t images_per_user;
    std::size_t modes;
    double offset_scale;
    double mode_spread;
    double style_scale;
    std::size_t pseudo_user_size;
};

std::string trim(std::string s)
{
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

std::vector<std::string> split_fields(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void GenConfig::validate() const
{
    require(groups >= 1, "groups must be >= 1");
    require(users_per_group >= 1, "users_per_group must be >= 1");
    require(images_per_user >= 1, "images_per_user must be >= 1");
    require(x_dim >= 1 && y_dim >= 1 && content_dim >= 1, "dimensions must be >= 1");
    require(std::isfinite(obs_noise) && obs_noise >= 0.0, "obs_noise must be finite and >= 0");
    require(std::isfinite(feature_noise) && feature_noise >= 0.0,
            "feature_noise must be finite and >= 0");
    require(styles.size() == groups, "need one style matrix per group");
    require(mode_offsets.size() == groups, "need mode offsets for every group");
    require(mode_weights.size() == groups, "need mode weights for every group");
    for (std::size_t g = 0; g < groups; ++g) {
        const auto tag = "group " + std::to_string(g);
        check_matrix(styles[g], y_dim, content_dim, tag + " style");
        require(!mode_offsets[g].empty(), tag + " needs at least one mode");
        check_matrix(mode_offsets[g], mode_offsets[g].size(), y_dim, tag + " mode offsets");
        require(mode_weights[g].size() == mode_offsets[g].size(),
                tag + " mode weights must match the mode count");
        double total = 0.0;
        for (double w : mode_weights[g]) {
            require(std::isfinite(w) && w >= 0.0, tag + " mode weights must be >= 0");
            total += w;
        }
        require(std::abs(total - 1.0) <= 1e-9, tag + " mode weights must sum to 1");
    }
    check_matrix(feature_map, x_dim, content_dim, "feature_map");
    require(pseudo_user_size == 0 || images_per_user % pseudo_user_size == 0,
            "images_per_user must be a multiple of pseudo_user_size");
}

std::string gen_config_to_json(const GenConfig& cfg)
{
    json j;
    j["groups"] = cfg.groups;
    j["users_per_group"] = cfg.users_per_group;
    j["images_per_user"] = cfg.images_per_user;
    j["x_dim"] = cfg.x_dim;
    j["y_dim"] = cfg.y_dim;
    j["content_dim"] = cfg.content_dim;
    j["styles"] = cfg.styles;
    j["mode_offsets"] = cfg.mode_offsets;
    j["mode_weights"] = cfg.mode_weights;
    j["obs_noise"] = cfg.obs_noise;
    j["feature_map"] = cfg.feature_map;
    j["feature_noise"] = cfg.feature_noise;
    j["pseudo_user_size"] = cfg.pseudo_user_size;
    j["seed"] = cfg.seed;
    return j.dump(2);
}

GenConfig gen_config_from_json(const std::string& text)
{
    GenConfig cfg;
    try {
        const auto j = json::parse(text);
        j.at("groups").get_to(cfg.groups);
        j.at("users_per_group").get_to(cfg.users_per_group);
        j.at("images_per_user").get_to(cfg.images_per_user);
        j.at("x_dim").get_to(cfg.x_dim);
        j.at("y_dim").get_to(cfg.y_dim);
        j.at("content_dim").get_to(cfg.content_dim);
        j.at("styles").get_to(cfg.styles);
        j.at("mode_offsets").get_to(cfg.mode_offsets);
        j.at("mode_weights").get_to(cfg.mode_weights);
        j.at("obs_noise").get_to(cfg.obs_noise);
        j.at("feature_map").get_to(cfg.feature_map);
        j.at("feature_noise").get_to(cfg.feature_noise);
        cfg.pseudo_user_size = j.value("pseudo_user_size", std::size_t{0});
        j.at("seed").get_to(cfg.seed);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("GenConfig JSON: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

std::vector<std::string> preset_names() { return {"casual", "frequent", "expert"}; }

GenConfig preset_config(const std::string& name, std::uint64_t seed)
{
    PresetShape shape{};
    if (name == "casual") {
        shape = {60, 20, 2, 0.3, 0.25, 0.1, 0};
    } else if (name == "frequent") {
        shape = {40, 50, 2, 0.45, 0.3, 0.1, 0};
    } else if (name == "expert") {
        // Three experts per group; each is split into pseudo-users of 50 images.
        shape = {3, 1000, 1, 0.6, 0.0, 0.1, 50};
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected casual, frequent or expert)");
    }
    GenConfig cfg;
    cfg.groups = 3;
    cfg.users_per_group = shape.users_per_group;
    cfg.images_per_user = shape.images_per_user;
    cfg.pseudo_user_size = shape.pseudo_user_size;
    cfg.seed = seed;

    Rng style_rng(derive_seed(seed, "preset.style"));
    Rng offset_rng(derive_seed(seed, "preset.offset"));
    Rng feature_rng(derive_seed(seed, "preset.features"));
    const double style_scale = shape.style_scale / std::sqrt(static_cast<double>(cfg.content_dim));
    for (std::size_t g = 0; g < cfg.groups; ++g) {
        cfg.styles.push_back(random_matrix(style_rng, cfg.y_dim, cfg.content_dim, style_scale));
        std::vector<double> base(cfg.y_dim);
        for (auto& b : base) {
            b = shape.offset_scale * (2.0 * offset_rng.uniform() - 1.0);
        }
        Matrix offsets;
        for (std::size_t m = 0; m < shape.modes; ++m) {
            auto o = base;
            if (shape.modes > 1) {
                const double sign = m % 2 == 0 ? -1.0 : 1.0;
                for (auto& v : o) {
                    v += sign * shape.mode_spread * offset_rng.uniform();
                }
            }
            offsets.push_back(std::move(o));
        }
        cfg.mode_offsets.push_back(std::move(offsets));
        cfg.mode_weights.emplace_back(shape.modes, 1.0 / static_cast<double>(shape.modes));
    }
    cfg.feature_map = random_matrix(feature_rng, cfg.x_dim, cfg.content_dim, 1.0);
    cfg.validate();
    return cfg;
}

std::vector<UserRecordSet> generate(const GenConfig& cfg)
{
    cfg.validate();
    const auto total_users = cfg.groups * cfg.users_per_group;
    std::vector<UserRecordSet> users;
    std::int64_t next_id = 0;
    for (std::size_t ui = 0; ui < total_users; ++ui) {
        const auto g = ui / cfg.users_per_group;
        const auto& style = cfg.styles[g];
        Rng rng(derive_seed(cfg.seed, "synth.user", ui));
        std::vector<ImageEditRecord> records;
        records.reserve(cfg.images_per_user);
        for (std::size_t n = 0; n < cfg.images_per_user; ++n) {
            const auto c = rng.normals(cfg.content_dim);
            ImageEditRecord r;
            r.group = static_cast<int>(g);
            r.x.resize(cfg.x_dim);
            for (std::size_t i = 0; i < cfg.x_dim; ++i) {
                double v = 0.0;
                for (std::size_t j = 0; j < cfg.content_dim; ++j) {
                    v += cfg.feature_map[i][j] * c[j];
                }
                r.x[i] = v + cfg.feature_noise * rng.normal();
            }
            const auto m = rng.categorical(cfg.mode_weights[g]);
            r.y.resize(cfg.y_dim);
            for (std::size_t i = 0; i < cfg.y_dim; ++i) {
                double v = cfg.mode_offsets[g][m][i];
                for (std::size_t j = 0; j < cfg.content_dim; ++j) {
                    v += style[i][j] * c[j];
                }
                r.y[i] = std::clamp(v + cfg.obs_noise * rng.normal(), -1.0, 1.0);
            }
            records.push_back(std::move(r));
        }
        const auto chunk = cfg.pseudo_user_size == 0 ? records.size() : cfg.pseudo_user_size;
        for (std::size_t start = 0; start < records.size(); start += chunk) {
            UserRecordSet u;
            u.user_id = next_id++;
            for (std::size_t n = start; n < start + chunk; ++n) {
                records[n].user_id = u.user_id;
                u.records.push_back(records[n]);
            }
            users.push_back(std::move(u));
        }
    }
    return users;
}

double oracle_loglik(const ImageEditRecord& record, const GenConfig& cfg)
{
    cfg.validate();
    if (record.x.size() != cfg.x_dim || record.y.size() != cfg.y_dim) {
        throw ShapeError("oracle_loglik: record dims (" + std::to_string(record.x.size()) + ", " +
                         std::to_string(record.y.size()) + ") do not match the generator");
    }
    if (cfg.obs_noise <= 0.0 || cfg.feature_noise <= 0.0) {
        throw ConfigError("oracle_loglik needs obs_noise > 0 and feature_noise > 0");
    }
    const auto Dc = static_cast<Eigen::Index>(cfg.content_dim);
    const auto Dy = static_cast<Eigen::Index>(cfg.y_dim);
    const Eigen::MatrixXd F = to_eigen(cfg.feature_map);
    const double tau2 = cfg.feature_noise * cfg.feature_noise;
    const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(record.x.data(), record.x.size());
    const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(record.y.data(), record.y.size());

    // Content posterior given features.
    const Eigen::MatrixXd precision =
        Eigen::MatrixXd::Identity(Dc, Dc) + F.transpose() * F / tau2;
    const Eigen::MatrixXd cov_c = precision.llt().solve(Eigen::MatrixXd::Identity(Dc, Dc));
    const Eigen::VectorXd mean_c = cov_c * F.transpose() * x / tau2;

    const double log_2pi = std::log(2.0 * std::numbers::pi);
    const double log_group = -std::log(static_cast<double>(cfg.groups));
    std::vector<double> terms;
    for (std::size_t g = 0; g < cfg.groups; ++g) {
        const Eigen::MatrixXd S = to_eigen(cfg.styles[g]);
        const Eigen::MatrixXd cov = S * cov_c * S.transpose() +
                                    cfg.obs_noise * cfg.obs_noise * Eigen::MatrixXd::Identity(Dy, Dy);
        const Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw NumericError("oracle_loglik: covariance is not positive definite");
        }
        const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
        const Eigen::VectorXd center = S * mean_c;
        for (std::size_t m = 0; m < cfg.modes(g); ++m) {
            const double w = cfg.mode_weights[g][m];
            if (w <= 0.0) {
                continue;
            }
            const Eigen::VectorXd off =
                Eigen::Map<const Eigen::VectorXd>(cfg.mode_offsets[g][m].data(), Dy);
            const Eigen::VectorXd r = y - center - off;
            const double quad = r.dot(llt.solve(r));
            terms.push_back(log_group + std::log(w) -
                            0.5 * (static_cast<double>(Dy) * log_2pi + log_det + quad));
        }
    }
    return logsumexp(terms);
}

void save_dataset(std::span<const ImageEditRecord> records, const std::filesystem::path& path)
{
    if (records.empty()) {
        throw DatasetError("save_dataset: no records");
    }
    const auto dx = records.front().x.size();
    const auto dy = records.front().y.size();
    check_dims(records, dx, dy);
    const bool with_group =
        std::any_of(records.begin(), records.end(), [](const auto& r) { return r.group.has_value(); });

    std::ostringstream out;
    out << "user_id";
    for (std::size_t i = 0; i < dx; ++i) {
        out << ",x_" << i;
    }
    for (std::size_t i = 0; i < dy; ++i) {
        out << ",y_" << i;
    }
    if (with_group) {
        out << ",group";
    }
    out << '\n';
    for (const auto& r : records) {
        out << r.user_id;
        for (double v : r.x) {
            out << ',' << format_double(v);
        }
        for (double v : r.y) {
            out << ',' << format_double(v);
        }
        if (with_group) {
            out << ',';
            if (r.group) {
                out << *r.group;
            }
        }
        out << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw DatasetError("cannot open " + path.string() + " for writing");
    }
    f << out.str();
    if (!f) {
        throw DatasetError("failed writing " + path.string());
    }
}

std::vector<ImageEditRecord> load_dataset(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) {
        throw DatasetError("cannot open dataset " + path.string());
    }
    const auto where = path.string();
    std::string line;
    if (!std::getline(f, line)) {
        throw DatasetError(where + ": empty file");
    }
    const auto header = split_fields(line);
    if (header.empty() || header.front() != "user_id") {
        throw DatasetError(where + ": missing column user_id");
    }
    std::size_t dx = 0;
    std::size_t dy = 0;
    bool has_group = false;
    std::size_t col = 1;
    while (col < header.size() && header[col] == "x_" + std::to_string(dx)) {
        ++dx;
        ++col;
    }
    while (col < header.size() && header[col] == "y_" + std::to_string(dy)) {
        ++dy;
        ++col;
    }
    if (col < header.size() && header[col] == "group") {
        has_group = true;
        ++col;
    }
    if (dx == 0) {
        throw DatasetError(where + ": missing column x_0");
    }
    if (col < header.size()) {
        const auto& name = header[col];
        if (name.starts_with("y_") || name == "group") {
            throw DatasetError(where + ": missing column y_" + std::to_string(dy));
        }
        if (name.starts_with("x_")) {
            throw DatasetError(where + ": missing column x_" + std::to_string(dx));
        }
        throw DatasetError(where + ": unexpected column '" + name + "'");
    }
    if (dy == 0) {
        throw DatasetError(where + ": missing column y_0");
    }

    std::vector<ImageEditRecord> records;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DatasetError(where + ": line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(fields.size()));
        }
        auto parse = [&](std::size_t c, auto& out) {
            const auto& s = fields[c];
            const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
            if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
                throw DatasetError(where + ": line " + std::to_string(line_no) + ", column " +
                                   header[c] + ": cannot parse '" + s + "'");
            }
        };
        ImageEditRecord r;
        parse(0, r.user_id);
        r.x.resize(dx);
        r.y.resize(dy);
        for (std::size_t i = 0; i < dx; ++i) {
            parse(1 + i, r.x[i]);
        }
        for (std::size_t i = 0; i < dy; ++i) {
            parse(1 + dx + i, r.y[i]);
        }
        if (has_group && !fields.back().empty()) {
            int g = 0;
            parse(header.size() - 1, g);
            r.group = g;
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace edit_suggest
