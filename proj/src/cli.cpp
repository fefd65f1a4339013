#include "edit_suggest/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "edit_suggest/checkpoint.hpp"
#include "edit_suggest/evalkit.hpp"
#include "edit_suggest/rng.hpp"
#include "edit_suggest/split.hpp"
#include "edit_suggest/synthdata.hpp"

namespace edit_suggest {

namespace fs = std::filesystem;

namespace {

template <class... Fs>
struct overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

std::string hex_id(std::uint64_t h)
{
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fmt(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

fs::path dataset_file(const fs::path& p)
{
    return fs::is_directory(p) ? p / "dataset.csv" : p;
}

fs::path prepare_out(const std::string& out)
{
    fs::path dir = out.empty() ? default_output_dir() : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

struct Dataset {
    std::vector<ImageEditRecord> records;
    std::string id;
};

Dataset read_dataset(const std::string& path)
{
    const auto file = dataset_file(path);
    Dataset d{load_dataset(file), hex_id(fnv1a(read_file(file)))};
    if (d.records.empty()) {
        throw DatasetError(file.string() + ": no records");
    }
    return d;
}

/// Rows of x_0..x_{D-1} from a CSV; other columns are ignored.
std::vector<std::vector<double>> read_features(const fs::path& path)
{
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) {
        throw DatasetError(path.string() + ": empty file");
    }
    std::vector<std::string> header;
    {
        std::istringstream h(line);
        std::string f;
        while (std::getline(h, f, ',')) {
            const auto b = f.find_first_not_of(" \t");
            const auto e = f.find_last_not_of(" \t\r");
            header.push_back(b == std::string::npos ? std::string{} : f.substr(b, e - b + 1));
        }
    }
    std::vector<std::size_t> cols;
    for (std::size_t d = 0;; ++d) {
        const auto it = std::find(header.begin(), header.end(), "x_" + std::to_string(d));
        if (it == header.end()) {
            break;
        }
        cols.push_back(static_cast<std::size_t>(it - header.begin()));
    }
    if (cols.empty()) {
        throw DatasetError(path.string() + ": missing column x_0");
    }
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \r\t") == std::string::npos) {
            continue;
        }
        std::vector<std::string> fields;
        std::istringstream l(line);
        std::string f;
        while (std::getline(l, f, ',')) {
            fields.push_back(f);
        }
        std::vector<double> x;
        for (auto c : cols) {
            if (c >= fields.size()) {
                throw DatasetError(path.string() + ": line " + std::to_string(line_no) +
                                   ": missing field " + header[c]);
            }
            try {
                std::size_t used = 0;
                x.push_back(std::stod(fields[c], &used));
            } catch (const std::exception&) {
                throw DatasetError(path.string() + ": line " + std::to_string(line_no) + ", column " +
                                   header[c] + ": cannot parse '" + fields[c] + "'");
            }
        }
        rows.push_back(std::move(x));
    }
    return rows;
}

Provenance provenance_of(const Checkpoint& ck, const std::string& ck_id, const std::string& data_id,
                         std::uint64_t seed)
{
    return {ck_id, data_id, seed, config_hash(ck)};
}

struct Loaded {
    Checkpoint ck;
    std::string id;
};

Loaded read_checkpoint(const std::string& path)
{
    const auto text = read_file(path);
    return {checkpoint_from_json(text), hex_id(fnv1a(text))};
}

std::vector<ImageEditRecord> eval_split(const Checkpoint& ck, const Dataset& data,
                                        const std::string& which, const SplitFractions& fr)
{
    if (which == "all") {
        return data.records;
    }
    std::vector<ImageEditRecord> tr, va, te;
    if (kind_of(ck.model) == ModelKind::cgm_svae) {
        const auto users = group_by_user(data.records);
        auto s = split_per_user(users, fr, ck.seed);
        tr = flatten(s.train);
        va = flatten(s.val);
        te = flatten(s.test);
    } else {
        auto s = split_records(data.records, fr, ck.seed);
        tr = std::move(s.train);
        va = std::move(s.val);
        te = std::move(s.test);
    }
    if (which == "train") {
        return tr;
    }
    if (which == "val") {
        return va;
    }
    return te;
}

Samples samples_for(const AnyModel& model, std::span<const ImageEditRecord> records,
                    std::size_t draws, std::uint64_t seed)
{
    return std::visit([&](const auto& m) { return model_samples(m, records, draws, seed); }, model);
}

RecordScorer scorer_for(const AnyModel& model, std::size_t samples, std::uint64_t seed)
{
    return std::visit(overloaded{
                          [&](const CgmVaeModel& m) { return scorer(m, samples, seed); },
                          [&](const CgmSvaeModel& m) { return scorer(m, samples, seed); },
                          [](const GaussianMlpModel& m) { return scorer(m); },
                          [](const MdnModel& m) { return scorer(m); },
                      },
                      model);
}

std::size_t x_dim_of(const AnyModel& model)
{
    return std::visit([](const auto& m) { return m.config.x_dim; }, model);
}

struct TrainOptions {
    std::string model = "cgm-vae";
    std::string data;
    std::string out;
    std::string checkpoint;
    std::uint64_t seed = 0;
    TrainConfig cfg;
    bool grid = false;
    SplitFractions fractions;
};

struct Trained {
    Checkpoint ck;
    double score;
};

Trained train_once(ModelKind kind, const TrainOptions& o, const TrainConfig& cfg,
                   const Dataset& data, std::ostream& out)
{
    auto report = [&out](const EpochLog& e) {
        out << "epoch " << e.epoch << " train " << fmt(e.train_objective) << " val "
            << fmt(e.val_objective) << '\n';
    };
    auto finish = [&](auto result) {
        double best = result.log.at(result.best_epoch - 1).val_objective;
        return Trained{Checkpoint{std::move(result.model), cfg, o.seed, data.id,
                                  std::move(result.log), result.best_epoch},
                       best};
    };
    if (kind == ModelKind::cgm_svae) {
        const auto users = group_by_user(data.records);
        const auto s = split_per_user(users, o.fractions, o.seed);
        return finish(train_cgm_svae(s.train, s.val, cfg, report));
    }
    const auto s = split_records(data.records, o.fractions, o.seed);
    switch (kind) {
    case ModelKind::cgm_vae:
        return finish(train_cgm_vae(s.train, s.val, cfg, report));
    case ModelKind::mlp:
        return finish(train_gaussian_mlp(s.train, s.val, cfg, report));
    default:
        return finish(train_mdn(s.train, s.val, cfg, report));
    }
}

int cmd_train(const TrainOptions& o, std::ostream& out)
{
    const auto kind = model_kind_from_string(o.model);
    const auto data = read_dataset(o.data);
    auto cfg = o.cfg;
    cfg.seed = o.seed;

    std::vector<TrainConfig> candidates;
    if (o.grid && kind != ModelKind::mlp) {
        const std::vector<std::size_t> latent = kind == ModelKind::mdn ? std::vector<std::size_t>{cfg.latent_dim}
                                                                        : std::vector<std::size_t>{2, 20};
        for (auto d : latent) {
            for (std::size_t L : {3, 5, 10}) {
                auto c = cfg;
                c.latent_dim = d;
                c.components = L;
                candidates.push_back(c);
            }
        }
    } else {
        candidates.push_back(cfg);
    }

    const auto dir = prepare_out(o.out);
    std::optional<Trained> best;
    std::ostringstream grid_csv;
    grid_csv << "# seed=" << o.seed << "\nlatent_dim,components,best_epoch,val_objective\n";
    for (const auto& c : candidates) {
        out << "training " << o.model << " latent_dim=" << c.latent_dim << " components=" << c.components
            << '\n';
        auto t = train_once(kind, o, c, data, out);
        grid_csv << c.latent_dim << ',' << c.components << ',' << t.ck.best_epoch << ',' << fmt(t.score)
                 << '\n';
        if (!best || t.score > best->score) {
            best = std::move(t);
        }
    }
    const fs::path path = o.checkpoint.empty() ? dir / "checkpoint.json" : fs::path(o.checkpoint);
    save_checkpoint(best->ck, path);
    if (candidates.size() > 1) {
        write_file_atomic(dir / "grid.csv", grid_csv.str());
    }
    out << "best epoch " << best->ck.best_epoch << " val " << fmt(best->score) << '\n';
    out << "wrote " << path.string() << '\n';
    return 0;
}

}  // namespace

fs::path default_output_dir()
{
    const char* env = std::getenv("EDIT_SUGGEST_OUT");
    return env && *env ? fs::path(env) : fs::path(".");
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Multimodal slider-edit suggestion with conditional Gaussian-mixture VAEs",
                 "edit-suggest"};
    app.require_subcommand(1);

    // synth
    std::string preset = "expert";
    std::string gen_json;
    std::string out_dir;
    std::uint64_t seed = 0;
    long pseudo = -1;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
    synth->add_option("--preset", preset, "casual, frequent or expert")->capture_default_str();
    synth->add_option("--config", gen_json, "GenConfig JSON file (overrides --preset)");
    synth->add_option("--seed", seed, "Global seed");
    synth->add_option("--out", out_dir, "Output directory");
    synth->add_option("--pseudo-users", pseudo, "Pseudo-user size (0 disables)");

    // train
    TrainOptions topt;
    auto* train = app.add_subcommand("train", "Train a model");
    train->add_option("--model", topt.model, "cgm-vae, cgm-svae, mlp or mdn")->capture_default_str();
    train->add_option("--data", topt.data, "Dataset CSV or directory")->required();
    train->add_option("--seed", topt.seed, "Global seed");
    train->add_option("--out", topt.out, "Output directory");
    train->add_option("--checkpoint", topt.checkpoint, "Checkpoint path (default OUT/checkpoint.json)");
    train->add_option("--epochs", topt.cfg.epochs)->capture_default_str();
    train->add_option("--batch-size", topt.cfg.batch_size)->capture_default_str();
    train->add_option("--user-batch-size", topt.cfg.user_batch_size)->capture_default_str();
    train->add_option("--lr", topt.cfg.adam.learning_rate)->capture_default_str();
    train->add_option("--latent-dim", topt.cfg.latent_dim)->capture_default_str();
    train->add_option("--components", topt.cfg.components, "Mixture components (MDN: mixtures)")
        ->capture_default_str();
    train->add_option("--hidden", topt.cfg.hidden, "Hidden widths, comma separated")->delimiter(',');
    train->add_option("--warmup-epochs", topt.cfg.warmup_epochs, "cgm-svae mixture warm-up epochs")
        ->capture_default_str();
    train->add_flag("--grid", topt.grid, "Sweep latent dim {2,20} x components {3,5,10}");
    train->add_option("--train-frac", topt.fractions.train)->capture_default_str();
    train->add_option("--val-frac", topt.fractions.val)->capture_default_str();
    train->add_option("--test-frac", topt.fractions.test)->capture_default_str();

    // eval
    std::string ck_path, data_path, metric = "ll", which = "test";
    std::size_t samples = 1000, draws = 10, k = 3;
    SplitFractions efr;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    eval->add_option("--checkpoint", ck_path)->required();
    eval->add_option("--data", data_path)->required();
    eval->add_option("--metric", metric, "ll, jsd or align")->capture_default_str();
    eval->add_option("--split", which, "train, val, test or all")->capture_default_str();
    eval->add_option("--samples", samples, "Importance samples per record")->capture_default_str();
    eval->add_option("--draws", draws, "Model draws per record for jsd")->capture_default_str();
    eval->add_option("--k", k, "Proposals per record for align")->capture_default_str();
    eval->add_option("--seed", seed);
    eval->add_option("--out", out_dir);
    eval->add_option("--train-frac", efr.train)->capture_default_str();
    eval->add_option("--val-frac", efr.val)->capture_default_str();
    eval->add_option("--test-frac", efr.test)->capture_default_str();

    // propose
    std::string record_path;
    std::size_t count = 20;
    auto* propose = app.add_subcommand("propose", "Propose slider edits for images");
    propose->add_option("--checkpoint", ck_path)->required();
    propose->add_option("--record", record_path, "CSV with x_0.. columns")->required();
    propose->add_option("--k", count)->capture_default_str();
    propose->add_option("--seed", seed);
    propose->add_option("--out", out_dir);

    // personalize
    std::int64_t user_id = 0;
    std::size_t n_cond = 10;
    auto* personalize = app.add_subcommand("personalize", "Infer a user's category and propose edits");
    personalize->add_option("--checkpoint", ck_path)->required();
    personalize->add_option("--data", data_path)->required();
    personalize->add_option("--user", user_id)->required();
    personalize->add_option("--n-cond", n_cond)->capture_default_str();
    personalize->add_option("--record", record_path, "CSV with x_0.. columns");
    personalize->add_option("--k", count)->capture_default_str();
    personalize->add_option("--seed", seed);
    personalize->add_option("--out", out_dir);

    // curve
    std::vector<std::size_t> grid{0, 1, 2, 3, 5, 10, 15, 20, 25, 30};
    std::size_t n_eval = 20, max_users = 0;
    std::size_t curve_samples = 100;
    auto* curve = app.add_subcommand("curve", "Personalization curve");
    curve->add_option("--checkpoint", ck_path)->required();
    curve->add_option("--data", data_path, "Held-out users")->required();
    curve->add_option("--grid", grid, "n_cond values, comma separated")->delimiter(',');
    curve->add_option("--n-eval", n_eval)->capture_default_str();
    curve->add_option("--samples", curve_samples)->capture_default_str();
    curve->add_option("--max-users", max_users, "Use the first N users by id (0 = all)");
    curve->add_option("--seed", seed);
    curve->add_option("--out", out_dir);

    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    if (!argv_rev.empty()) {
        argv_rev.pop_back();
    }
    try {
        app.parse(argv_rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*synth) {
            auto cfg = gen_json.empty() ? preset_config(preset, seed) : gen_config_from_json(read_file(gen_json));
            if (!gen_json.empty() && synth->count("--seed")) {
                cfg.seed = seed;
            }
            if (pseudo >= 0) {
                cfg.pseudo_user_size = static_cast<std::size_t>(pseudo);
            }
            cfg.validate();
            const auto dir = prepare_out(out_dir);
            const auto records = flatten(generate(cfg));
            save_dataset(records, dir / "dataset.csv.tmp");
            fs::rename(dir / "dataset.csv.tmp", dir / "dataset.csv");
            write_file_atomic(dir / "gen_config.json", gen_config_to_json(cfg) + "\n");
            out << "wrote " << records.size() << " records to " << (dir / "dataset.csv").string() << '\n';
            return 0;
        }
        if (*train) {
            return cmd_train(topt, out);
        }
        if (*eval) {
            const auto [ck, ck_id] = read_checkpoint(ck_path);
            const auto data = read_dataset(data_path);
            const auto records = eval_split(ck, data, which, efr);
            if (records.empty()) {
                throw ConfigError("eval: the " + which + " split is empty");
            }
            const auto dir = prepare_out(out_dir);
            EvalReport report;
            report.provenance = provenance_of(ck, ck_id, data.id, seed);
            if (metric == "ll") {
                report.metrics["ll"] = summarize(score_records(records, scorer_for(ck.model, samples, seed)));
            } else if (metric == "jsd") {
                const auto truth = true_samples(records);
                const auto model = samples_for(ck.model, records, draws, seed);
                const HistogramSpec spec;
                const auto jsd = jsd_per_slider(truth, model, spec);
                report.metrics["jsd"] = {jsd.mean, summarize(jsd.per_slider).std_error, jsd.per_slider.size()};
                report.series["jsd_per_slider"] = jsd.per_slider;
                for (std::size_t d = 0; d < jsd.per_slider.size(); ++d) {
                    write_file_atomic(dir / ("histogram_slider_" + std::to_string(d) + ".csv"),
                                      histogram_csv(slider_column(truth, d), slider_column(model, d), spec,
                                                    report.provenance));
                }
            } else if (metric == "align") {
                std::vector<double> errors;
                for (const auto& r : records) {
                    const auto proposals = samples_for(ck.model, std::span(&r, 1), k, seed);
                    errors.push_back(align_proposals(proposals, {r.y}).mse);
                }
                report.metrics["align_mse"] = summarize(errors);
            } else {
                throw ConfigError("unknown metric '" + metric + "' (expected ll, jsd or align)");
            }
            const auto path = dir / ("report_" + metric + ".json");
            write_file_atomic(path, report.to_json());
            out << report.to_json();
            return 0;
        }
        if (*propose) {
            const auto [ck, ck_id] = read_checkpoint(ck_path);
            const auto rows = read_features(record_path);
            const auto dir = prepare_out(out_dir);
            std::ostringstream csv;
            csv << "# checkpoint=" << ck_id << "\n# seed=" << seed << "\n# config_hash=" << config_hash(ck)
                << '\n';
            bool header = false;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                if (rows[i].size() != x_dim_of(ck.model)) {
                    throw ShapeError("record row " + std::to_string(i) + " has " +
                                     std::to_string(rows[i].size()) + " features, model expects " +
                                     std::to_string(x_dim_of(ck.model)));
                }
                ImageEditRecord r{0, rows[i], {}, {}};
                const auto props = samples_for(ck.model, std::span(&r, 1), count,
                                               derive_seed(seed, "propose.row", i));
                for (std::size_t j = 0; j < props.size(); ++j) {
                    if (!header) {
                        csv << "row,proposal";
                        for (std::size_t d = 0; d < props[j].size(); ++d) {
                            csv << ",y_" << d;
                        }
                        csv << '\n';
                        header = true;
                    }
                    csv << i << ',' << j;
                    for (double v : props[j]) {
                        csv << ',' << fmt(v);
                    }
                    csv << '\n';
                }
            }
            write_file_atomic(dir / "proposals.csv", csv.str());
            out << "wrote " << (dir / "proposals.csv").string() << '\n';
            return 0;
        }
        if (*personalize) {
            const auto [ck, ck_id] = read_checkpoint(ck_path);
            const auto* model = std::get_if<CgmSvaeModel>(&ck.model);
            if (!model) {
                throw ConfigError("personalize needs a cgm-svae checkpoint, got " + to_string(kind_of(ck.model)));
            }
            const auto data = read_dataset(data_path);
            const auto users = group_by_user(data.records);
            const auto it = std::find_if(users.begin(), users.end(),
                                         [&](const auto& u) { return u.user_id == user_id; });
            if (it == users.end()) {
                throw ConfigError("user " + std::to_string(user_id) + " not found in " + data_path);
            }
            if (n_cond > it->size()) {
                throw ConfigError("user " + std::to_string(user_id) + " has only " +
                                  std::to_string(it->size()) + " records");
            }
            UserRecordSet cond{user_id, {it->records.begin(), it->records.begin() + static_cast<std::ptrdiff_t>(n_cond)}};
            const auto q = user_posterior(cond, *model);
            std::vector<std::vector<double>> xs;
            if (!record_path.empty()) {
                xs = read_features(record_path);
            } else if (n_cond < it->size()) {
                xs.push_back(it->records[n_cond].x);
            }
            nlohmann::ordered_json j;
            j["user"] = user_id;
            j["n_cond"] = n_cond;
            j["posterior"] = q.probs;
            j["map_category"] = map_user_category(cond, *model);
            j["proposals"] = nlohmann::ordered_json::array();
            for (std::size_t i = 0; i < xs.size(); ++i) {
                j["proposals"].push_back(
                    propose_personalized(xs[i], count, q, *model, derive_seed(seed, "personalize.row", i)));
            }
            const auto p = provenance_of(ck, ck_id, data.id, seed);
            j["provenance"] = {{"checkpoint", p.checkpoint_id},
                               {"dataset", p.dataset_id},
                               {"seed", p.seed},
                               {"config_hash", p.config_hash}};
            const auto dir = prepare_out(out_dir);
            const auto path = dir / ("personalize_user" + std::to_string(user_id) + ".json");
            write_file_atomic(path, j.dump(2) + "\n");
            out << "wrote " << path.string() << '\n';
            return 0;
        }
        if (*curve) {
            const auto [ck, ck_id] = read_checkpoint(ck_path);
            const auto* model = std::get_if<CgmSvaeModel>(&ck.model);
            if (!model) {
                throw ConfigError("curve needs a cgm-svae checkpoint, got " + to_string(kind_of(ck.model)));
            }
            const auto data = read_dataset(data_path);
            auto users = group_by_user(data.records);
            std::sort(users.begin(), users.end(), [](const auto& a, const auto& b) { return a.user_id < b.user_id; });
            if (max_users > 0 && users.size() > max_users) {
                users.resize(max_users);
            }
            const auto c = personalization_curve(*model, users, grid, n_eval, curve_samples, seed);
            if (c.skipped_users > 0) {
                err << "warning: skipped " << c.skipped_users << " users with too few records\n";
            }
            const auto p = provenance_of(ck, ck_id, data.id, seed);
            const auto dir = prepare_out(out_dir);
            write_file_atomic(dir / "curve.csv", curve_csv(c, p));
            write_file_atomic(dir / "trajectories.csv", trajectories_csv(c, p));
            out << curve_csv(c, p);
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run(int argc, char** argv)
{
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace edit_suggest
