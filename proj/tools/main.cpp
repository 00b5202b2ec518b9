// latentprog: command-line front end for the latent progression pipeline.
//
//   simulate   synthetic cohort -> PGMs, metadata.csv, ground_truth.json
//   train-toy  train the toy GAN on a directory of PGMs
//   invert     one image -> latent store with one record + JSON sidecar
//   ingest     invert every image of a cohort -> latent dictionary
//   predict    extrapolate a query knee to a future visit
//   risk       per-knee progression risk from a probability CSV
//   evaluate   AUC / cutoff / bootstrap / permutation report from scores CSV
//
// Exit codes: 0 success, 1 domain error (one "error kind=<Kind>: ..." line on
// stderr), 2 usage error.

#include "latentprog/cohort.hpp"
#include "latentprog/csv.hpp"
#include "latentprog/error.hpp"
#include "latentprog/gan.hpp"
#include "latentprog/image.hpp"
#include "latentprog/inversion.hpp"
#include "latentprog/latent_core.hpp"
#include "latentprog/risk.hpp"
#include "latentprog/stats.hpp"
#include "latentprog/trajectory.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    lp::csv::write_text(path, j.dump(2) + "\n");
}

// Every subcommand records what it did next to its outputs.
struct Manifest {
    explicit Manifest(std::string cmd) : command(std::move(cmd)) {}

    std::string command;
    json config = json::object();
    json seeds = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const fs::path& path) const {
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        json j{{"command", command},
               {"config", config},
               {"config_digest", hex64(fnv1a(config.dump()))},
               {"seeds", seeds},
               {"inputs", inputs},
               {"outputs", outputs},
               {"tool_version", kVersion},
               {"wall_time_seconds", wall}};
        write_json(path, j);
    }
};

// "<prefix>.<ext>" without clobbering directories in the prefix.
fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    return fs::path(prefix.string() + suffix);
}

std::vector<double> to_doubles(const lp::LatentVector& v) { return v.as_doubles(); }

json hit_json(const lp::trajectory::NeighborHit& h) {
    return {{"subject_id", h.key.subject_id},
            {"side", std::string(lp::side_name(h.key.side))},
            {"distance", h.distance},
            {"baseline_month", h.pair.baseline_month},
            {"followup_month", h.pair.followup_month},
            {"delta_t", h.pair.delta_t}};
}

struct FileKey {
    std::string subject_id = "query";
    lp::Side side = lp::Side::Right;
    int month = 0;
};

// Cohort image names look like <subject>_<side>_<month>.pgm.
FileKey key_from_filename(const fs::path& path) {
    static const std::regex pattern(R"((.+)_(left|right)_(\d+))");
    std::smatch m;
    const std::string stem = path.stem().string();
    FileKey k;
    if (std::regex_match(stem, m, pattern)) {
        k.subject_id = m[1];
        k.side = lp::parse_side(m[2].str());
        k.month = std::stoi(m[3]);
    }
    return k;
}

std::vector<fs::path> pgm_files(const fs::path& dir) {
    lp::require(fs::is_directory(dir), lp::ErrorKind::IoError, "not a directory: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

// ----------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
    int subjects = 200;
    double progressors = 0.2;
    std::uint64_t seed = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& a) {
    lp::cohort::CohortConfig cfg;
    cfg.n_subjects = a.subjects;
    cfg.progressor_fraction = a.progressors;
    cfg.seed = a.seed;
    spdlog::info("simulating {} subjects ({} progressor fraction), seed {}", a.subjects, a.progressors, a.seed);
    const auto cohort = lp::cohort::simulate_cohort(cfg);
    const fs::path dir(a.out);
    lp::cohort::write_cohort(cohort, dir);
    Manifest m{"simulate"};
    m.config = {{"subjects", a.subjects}, {"progressors", a.progressors}, {"visits", cfg.visits}};
    m.seeds = {{"seed", a.seed}};
    m.outputs = {dir.string()};
    m.write(dir / "manifest.json");
    spdlog::info("wrote {} images to {}", cohort.visits.size(), dir.string());
}

struct TrainArgs {
    std::string data;
    std::string config;
    std::optional<int> steps;
    std::optional<std::uint64_t> seed;
    std::optional<int> latent_dim;
    std::string out;
};

void run_train(const TrainArgs& a) {
    lp::gan::TrainConfig cfg = a.config.empty() ? lp::gan::TrainConfig{} : lp::gan::load_train_config(a.config);
    if (a.steps) cfg.steps = *a.steps;
    if (a.seed) cfg.seed = *a.seed;
    if (a.latent_dim) cfg.arch.latent_dim = *a.latent_dim;
    std::vector<lp::Image> images;
    for (const auto& f : pgm_files(a.data)) images.push_back(lp::read_pgm(f));
    spdlog::info("training on {} images for {} steps", images.size(), cfg.steps);
    const auto result = lp::gan::train_toy_gan(cfg, images, [](const lp::gan::LogEntry& e) {
        if (!std::isnan(e.frechet))
            spdlog::info("step {}: d_loss {:.4f} g_loss {:.4f} frechet {:.4f}", e.step, e.d_loss, e.g_loss, e.frechet);
        else
            spdlog::debug("step {}: d_loss {:.4f} g_loss {:.4f}", e.step, e.d_loss, e.g_loss);
    });
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    lp::gan::save_model(out, result.params);
    json log = json::array();
    for (const auto& [step, fd] : result.frechet) log.push_back({{"step", step}, {"frechet", fd}});
    write_json(with_suffix(out, ".log.json"), {{"frechet", log}});

    Manifest m{"train-toy"};
    m.config = {{"steps", cfg.steps},          {"batch_size", cfg.batch_size}, {"lr_g", cfg.lr_g},
                {"lr_d", cfg.lr_d},            {"gamma", cfg.gamma},           {"pl_weight", cfg.pl_weight},
                {"lazy_k", cfg.lazy_k},        {"latent_dim", cfg.arch.latent_dim},
                {"base_res", cfg.arch.base_res}, {"channels", cfg.arch.channels}};
    m.seeds = {{"seed", cfg.seed}};
    m.inputs = {a.data};
    if (!a.config.empty()) m.inputs.push_back(a.config);
    m.outputs = {out.string(), with_suffix(out, ".log.json").string()};
    m.write(with_suffix(out, ".manifest.json"));
}

struct InversionArgs {
    std::string config;
    std::optional<int> steps;
    std::uint64_t seed = 0;

    lp::inversion::InversionConfig build() const {
        lp::inversion::InversionConfig cfg =
            config.empty() ? lp::inversion::InversionConfig{} : lp::inversion::load_inversion_config(config);
        if (steps) cfg.steps = *steps;
        return cfg;
    }
};

json inversion_config_json(const lp::inversion::InversionConfig& c) {
    return {{"eta", c.eta},           {"alpha", c.alpha},           {"n_z", c.n_z},
            {"steps", c.steps},       {"noise_ramp", c.noise_ramp}, {"constant_t", c.constant_t},
            {"exploration_scale", c.exploration_scale}};
}

struct InvertArgs {
    std::string gan;
    std::string image;
    std::string out;
    InversionArgs inv;
};

void run_invert(const InvertArgs& a) {
    const auto params = lp::gan::load_model(a.gan);
    const auto target = lp::read_pgm(a.image);
    const auto cfg = a.inv.build();
    spdlog::info("inverting {} ({} steps)", a.image, cfg.steps);
    const auto res = lp::inversion::invert_generator(params, target, cfg, a.inv.seed);
    const auto recon = lp::gan::generator_forward(params, res.w, res.noise);
    const double ssim = lp::stats::ssim(recon, target);

    const FileKey key = key_from_filename(a.image);
    lp::KneeRecord rec{key.subject_id, key.side, key.month, std::nullopt, lp::LatentVector::from_doubles(res.w)};
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    lp::save_latent_store(with_suffix(out, ".ltnt"), lp::make_dictionary(params.arch.latent_dim, {rec}));
    write_json(with_suffix(out, ".json"),
               {{"final_loss", res.final_loss}, {"ssim", ssim}, {"steps", cfg.steps}, {"seed", a.inv.seed}});

    Manifest m{"invert"};
    m.config = inversion_config_json(cfg);
    m.seeds = {{"seed", a.inv.seed}};
    m.inputs = {a.gan, a.image};
    m.outputs = {with_suffix(out, ".ltnt").string(), with_suffix(out, ".json").string()};
    m.write(with_suffix(out, ".manifest.json"));
    spdlog::info("final loss {:.6g}, ssim {:.4f}", res.final_loss, ssim);
}

struct IngestArgs {
    std::string gan;
    std::string data;
    std::string meta;
    std::string out;
    InversionArgs inv;
};

void run_ingest(const IngestArgs& a) {
    const auto params = lp::gan::load_model(a.gan);
    const fs::path data(a.data);
    const fs::path meta_path = a.meta.empty() ? data / "metadata.csv" : fs::path(a.meta);
    const auto rows = lp::read_visit_csv(meta_path);
    std::vector<lp::Image> images;
    for (const auto& row : rows) images.push_back(lp::read_pgm(data / lp::cohort::image_filename(row.visit())));
    const auto cfg = a.inv.build();
    spdlog::info("inverting {} images ({} steps each)", images.size(), cfg.steps);
    const auto stats = lp::inversion::latent_statistics(params, cfg.n_z, a.inv.seed);
    const auto results = lp::inversion::invert_many(params, images, cfg, a.inv.seed, stats);
    lp::LatentTable latents;
    for (std::size_t i = 0; i < rows.size(); ++i)
        latents[rows[i].visit()] = lp::LatentVector::from_doubles(results[i].w);
    const auto dict = lp::build_dictionary(rows, latents);
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    lp::save_latent_store(out, dict);

    Manifest m{"ingest"};
    m.config = inversion_config_json(cfg);
    m.seeds = {{"seed", a.inv.seed}};
    m.inputs = {a.gan, a.data, meta_path.string()};
    m.outputs = {out.string()};
    m.write(with_suffix(out, ".manifest.json"));
    spdlog::info("wrote {} latents to {}", dict.size(), out.string());
}

struct PredictArgs {
    std::string dict;
    std::string gan;
    std::string query;
    int neighbors = 1;
    int horizon = 96;
    std::string scaling = "as-written";
    std::string out;
    InversionArgs inv;
};

void run_predict(const PredictArgs& a) {
    const auto params = lp::gan::load_model(a.gan);
    const auto dict = lp::load_latent_store(a.dict);
    lp::trajectory::PredictConfig cfg;
    cfg.neighbors = a.neighbors;
    cfg.horizon_months = a.horizon;
    cfg.scaling = lp::trajectory::parse_scaling(a.scaling);
    cfg.inversion = a.inv.build();
    cfg.seed = a.inv.seed;

    lp::trajectory::Prediction pred;
    json query_json;
    static const std::regex knee_pattern(R"((.+):(left|right))");
    std::smatch m;
    if (a.query.size() > 4 && a.query.ends_with(".pgm")) {
        pred = lp::trajectory::predict_future(params, dict, lp::read_pgm(a.query), cfg);
        query_json = {{"image", a.query}};
    } else if (std::regex_match(a.query, m, knee_pattern)) {
        const lp::KneeKey key{m[1], lp::parse_side(m[2].str())};
        const auto visits = dict.visits(key);
        lp::require(!visits.empty(), lp::ErrorKind::MissingLatent, "knee " + lp::to_string(key) + " is not in the dictionary");
        cfg.exclude = key;
        pred = lp::trajectory::predict_future(params, dict, visits.front().latent, cfg);
        query_json = {{"subject_id", key.subject_id},
                      {"side", std::string(lp::side_name(key.side))},
                      {"baseline_month", visits.front().visit_month}};
    } else {
        throw CLI::ValidationError("--query", "expected an image path ending in .pgm or <subject>:<left|right>");
    }

    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    lp::write_pgm(with_suffix(out, ".pgm"), pred.image);
    json hits = json::array();
    for (const auto& h : pred.extrapolation.neighbors_used) hits.push_back(hit_json(h));
    write_json(with_suffix(out, ".json"), {{"query", query_json},
                                           {"query_w", to_doubles(pred.query_w)},
                                           {"delta_w", pred.extrapolation.delta_w},
                                           {"predicted_w", to_doubles(pred.extrapolation.predicted_w)},
                                           {"neighbors_used", hits},
                                           {"horizon_months", pred.extrapolation.horizon_months},
                                           {"scaling", std::string(lp::trajectory::scaling_name(cfg.scaling))}});
    Manifest man{"predict"};
    man.config = {{"neighbors", a.neighbors}, {"horizon", a.horizon}, {"scaling", a.scaling}, {"query", a.query}};
    if (a.query.ends_with(".pgm")) man.config["inversion"] = inversion_config_json(cfg.inversion);
    man.seeds = {{"seed", a.inv.seed}};
    man.inputs = {a.dict, a.gan};
    man.outputs = {with_suffix(out, ".pgm").string(), with_suffix(out, ".json").string()};
    man.write(with_suffix(out, ".manifest.json"));
}

struct RiskArgs {
    std::string probs;
    int baseline_month = 0;
    std::string source = "real";
    std::string out;
};

void run_risk(const RiskArgs& a) {
    const auto table = lp::risk::read_probability_csv(a.probs);
    const auto risks = lp::risk::knee_risks(table, a.baseline_month);
    json knees = json::array();
    for (const auto& r : risks)
        knees.push_back({{"subject_id", r.key.subject_id},
                         {"side", std::string(lp::side_name(r.key.side))},
                         {"baseline_month", r.baseline_month},
                         {"followup_months", r.followup_months},
                         {"p_progress", r.p_progress}});
    const fs::path out(a.out);
    // Whether follow-up probabilities came from real or predicted images is
    // not knowable from the CSV, so the caller states it.
    write_json(out, {{"followup_source", a.source}, {"knees", knees}});
    Manifest m{"risk"};
    m.config = {{"baseline_month", a.baseline_month}, {"followup_source", a.source}};
    m.inputs = {a.probs};
    m.outputs = {out.string()};
    m.write(with_suffix(out, ".manifest.json"));
    spdlog::info("risk trajectories for {} knees", risks.size());
}

struct EvaluateArgs {
    std::string scores;
    int redraws = 10000;
    int perm = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void run_evaluate(const EvaluateArgs& a) {
    const auto t = lp::csv::read(a.scores);
    const std::size_t c_a = t.column("score_model_a");
    const std::size_t c_b = t.column("score_model_b");
    const std::size_t c_y = t.column("label");
    std::vector<double> sa, sb;
    std::vector<int> y;
    for (const auto& row : t.rows) {
        sa.push_back(lp::csv::to_double(row.at(c_a), "score_model_a"));
        sb.push_back(lp::csv::to_double(row.at(c_b), "score_model_b"));
        y.push_back(static_cast<int>(lp::csv::to_long(row.at(c_y), "label")));
    }
    const lp::stats::Metric auc = [](std::span<const double> s, std::span<const int> l) {
        return lp::stats::roc_auc(s, l);
    };
    const auto ci_a = lp::stats::bootstrap_ci(auc, sa, y, a.redraws, a.seed);
    const auto ci_b = lp::stats::bootstrap_ci(auc, sb, y, a.redraws, lp::derive_seed(a.seed, 1));
    const auto perm = lp::stats::permutation_test(sa, sb, y, auc, a.perm, lp::derive_seed(a.seed, 2));
    const auto cut = lp::stats::optimal_cutoff(sa, y);
    auto metric_json = [](const lp::stats::Interval& ci) {
        return json{{"value", ci.point}, {"ci_lo", ci.lo}, {"ci_hi", ci.hi}, {"sd", ci.sd},
                    {"invalid_resamples", ci.invalid_resamples}};
    };
    json report{{"auc_model_a", metric_json(ci_a)},
                {"auc_model_b", metric_json(ci_b)},
                {"auc_difference", {{"value", perm.observed_delta}, {"p_value", perm.p_value}}},
                {"cutoff_model_a",
                 {{"threshold", cut.threshold},
                  {"sensitivity", cut.sensitivity},
                  {"specificity", cut.specificity},
                  {"objective", cut.objective}}},
                {"n", y.size()}};
    const fs::path out(a.out);
    write_json(out, report);
    Manifest m{"evaluate"};
    m.config = {{"redraws", a.redraws}, {"perm", a.perm}};
    m.seeds = {{"seed", a.seed}};
    m.inputs = {a.scores};
    m.outputs = {out.string()};
    m.write(with_suffix(out, ".manifest.json"));
    spdlog::info("AUC a {:.4f} [{:.4f}, {:.4f}], b {:.4f}, p = {:.4g}", ci_a.point, ci_a.lo, ci_a.hi, ci_b.point,
                 perm.p_value);
}

void add_inversion_options(CLI::App* cmd, InversionArgs& inv) {
    cmd->add_option("--config", inv.config, "inversion settings (TOML)")->check(CLI::ExistingFile);
    cmd->add_option("--steps", inv.steps, "optimisation steps (overrides the config)")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", inv.seed, "random seed");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-space progression modelling on longitudinal images", "latentprog"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    std::string log_level = "warn";
    app.add_option("--log-level", log_level, "error, warn, info or debug")
        ->check(CLI::IsMember({"error", "warn", "info", "debug"}))
        ->configurable(false);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "write a synthetic longitudinal cohort");
    c_sim->add_option("--subjects", sim.subjects, "number of subjects");
    c_sim->add_option("--progressors", sim.progressors, "fraction of progressors");
    c_sim->add_option("--seed", sim.seed, "random seed");
    c_sim->add_option("--out", sim.out, "output directory")->required();

    TrainArgs train;
    auto* c_train = app.add_subcommand("train-toy", "train the toy GAN");
    c_train->add_option("--data", train.data, "directory of PGM images")->required()->check(CLI::ExistingDirectory);
    c_train->add_option("--config", train.config, "training settings (TOML)")->check(CLI::ExistingFile);
    c_train->add_option("--steps", train.steps, "training steps (overrides the config)");
    c_train->add_option("--seed", train.seed, "random seed (overrides the config)");
    c_train->add_option("--latent-dim", train.latent_dim, "latent dimension (overrides the config)");
    c_train->add_option("--out", train.out, "model file")->required();

    InvertArgs inv;
    auto* c_inv = app.add_subcommand("invert", "recover the latent of one image");
    c_inv->add_option("--gan", inv.gan, "model file")->required()->check(CLI::ExistingFile);
    c_inv->add_option("--image", inv.image, "PGM image")->required()->check(CLI::ExistingFile);
    c_inv->add_option("--out", inv.out, "output prefix")->required();
    add_inversion_options(c_inv, inv.inv);

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "invert a cohort into a latent dictionary");
    c_ingest->add_option("--gan", ingest.gan, "model file")->required()->check(CLI::ExistingFile);
    c_ingest->add_option("--data", ingest.data, "cohort directory")->required()->check(CLI::ExistingDirectory);
    c_ingest->add_option("--meta", ingest.meta, "visit CSV (default: <data>/metadata.csv)");
    c_ingest->add_option("--out", ingest.out, "latent store")->required();
    add_inversion_options(c_ingest, ingest.inv);

    PredictArgs pred;
    auto* c_pred = app.add_subcommand("predict", "extrapolate a knee to a future visit");
    c_pred->add_option("--dict", pred.dict, "latent store")->required()->check(CLI::ExistingFile);
    c_pred->add_option("--gan", pred.gan, "model file")->required()->check(CLI::ExistingFile);
    c_pred->add_option("--query", pred.query, "image.pgm or <subject>:<left|right>")->required();
    c_pred->add_option("--neighbors", pred.neighbors, "number of neighbours")->check(CLI::PositiveNumber);
    c_pred->add_option("--horizon", pred.horizon, "prediction horizon in months");
    c_pred->add_option("--scaling", pred.scaling, "as-written or linear-time")
        ->check(CLI::IsMember({"as-written", "linear-time"}));
    c_pred->add_option("--out", pred.out, "output prefix")->required();
    add_inversion_options(c_pred, pred.inv);

    RiskArgs risk;
    auto* c_risk = app.add_subcommand("risk", "progression risk trajectories from grade probabilities");
    c_risk->add_option("--probs", risk.probs, "probability CSV")->required()->check(CLI::ExistingFile);
    c_risk->add_option("--baseline-month", risk.baseline_month, "baseline visit month");
    c_risk->add_option("--source", risk.source, "where follow-up probabilities came from")
        ->check(CLI::IsMember({"real", "predicted"}));
    c_risk->add_option("--out", risk.out, "output JSON")->required();

    EvaluateArgs eval;
    auto* c_eval = app.add_subcommand("evaluate", "compare two score sets");
    c_eval->add_option("--scores", eval.scores, "scores CSV")->required()->check(CLI::ExistingFile);
    c_eval->add_option("--redraws", eval.redraws, "bootstrap redraws");
    c_eval->add_option("--perm", eval.perm, "permutation rounds");
    c_eval->add_option("--seed", eval.seed, "random seed");
    c_eval->add_option("--out", eval.out, "report JSON")->required();

    for (auto* sub : app.get_subcommands({}))
        sub->add_option("--log-level", log_level, "error, warn, info or debug")
            ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    spdlog::set_default_logger(spdlog::stderr_color_mt("latentprog"));
    spdlog::set_level(spdlog::level::from_str(log_level));
    spdlog::set_pattern("[%l] %v");

    try {
        if (*c_sim) run_simulate(sim);
        else if (*c_train) run_train(train);
        else if (*c_inv) run_invert(inv);
        else if (*c_ingest) run_ingest(ingest);
        else if (*c_pred) run_predict(pred);
        else if (*c_risk) run_risk(risk);
        else if (*c_eval) run_evaluate(eval);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const lp::Error& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error kind=" << lp::error_kind_name(e.kind()) << ": " << msg << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::string msg = e.what();
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        std::cerr << "error kind=IoError: " << msg << "\n";
        return 1;
    }
    return 0;
}
