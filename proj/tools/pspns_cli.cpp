// Command-line front end: data preparation, synthetic data, training and the
// ablation grid. All artifacts are deterministic under fixed flags; wall-clock
// timings go to stderr only.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pspns/pspns.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class StageTimer {
public:
    explicit StageTimer(std::string name) : name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
    ~StageTimer() {
        auto sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        std::cerr << "[time] " << name_ << ": " << std::fixed << std::setprecision(2) << sec << "s\n";
    }

private:
    std::string name_;
    std::chrono::steady_clock::time_point start_;
};

pspns::SplitRatios parse_ratios(const std::string& s) {
    std::stringstream ss(s);
    std::string tok;
    std::vector<double> parts;
    while (std::getline(ss, tok, ',')) parts.push_back(std::stod(tok));
    if (parts.size() != 3) throw std::invalid_argument("ratios must be three comma-separated numbers");
    return pspns::SplitRatios{parts[0], parts[1], parts[2]};
}

// "0..4" (inclusive) or "0,2,5"
std::vector<uint64_t> parse_seeds(const std::string& s) {
    std::vector<uint64_t> seeds;
    size_t dots = s.find("..");
    if (dots != std::string::npos) {
        uint64_t lo = std::stoull(s.substr(0, dots));
        uint64_t hi = std::stoull(s.substr(dots + 2));
        if (hi < lo) throw std::invalid_argument("seed range is descending");
        for (uint64_t x = lo; x <= hi; ++x) seeds.push_back(x);
    } else {
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) seeds.push_back(std::stoull(tok));
    }
    if (seeds.empty()) throw std::invalid_argument("empty seed list");
    return seeds;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << content;
    if (!out) throw std::runtime_error("write failed on " + path.string());
}

json eval_report_json(const pspns::EvalReport& r) {
    json j;
    j["n_evaluable"] = r.n_evaluable;
    for (size_t i = 0; i < r.ks.size(); ++i) {
        j["recall@" + std::to_string(r.ks[i])] = r.recall[i];
        j["precision@" + std::to_string(r.ks[i])] = r.precision[i];
    }
    return j;
}

std::string metric_line(const pspns::EvalReport& r) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    for (size_t i = 0; i < r.ks.size(); ++i) {
        if (i) os << "  ";
        os << "R@" << r.ks[i] << "=" << r.recall[i] << " P@" << r.ks[i] << "=" << r.precision[i];
    }
    return os.str();
}

// ---------------------------------------------------------------- prepare

struct PrepareArgs {
    std::string input;
    std::string format = "tsv";
    std::string ratios = "0.8,0.1,0.1";
    uint64_t seed = 0;
    std::string out;
};

int cmd_prepare(const PrepareArgs& args) {
    pspns::FileFormat fmt;
    if (args.format == "tsv") fmt = pspns::FileFormat::tsv;
    else if (args.format == "csv") fmt = pspns::FileFormat::csv;
    else throw std::invalid_argument("format must be tsv or csv");

    pspns::SplitRatios ratios = parse_ratios(args.ratios);
    pspns::InteractionDataset ds = pspns::load_interactions(args.input, fmt);
    pspns::SplitDataset split = pspns::split_dataset(ds, ratios, args.seed);

    fs::create_directories(args.out);
    pspns::save_split_cache(split, (fs::path(args.out) / "split.bin").string());

    double density = 100.0 * static_cast<double>(ds.interactions.size()) /
                     (static_cast<double>(ds.n_users) * static_cast<double>(ds.n_items));
    std::ostringstream stats;
    stats << "users\t" << ds.n_users << "\n"
          << "items\t" << ds.n_items << "\n"
          << "interactions\t" << ds.interactions.size() << "\n"
          << "density_pct\t" << std::fixed << std::setprecision(3) << density << "\n"
          << "train\t" << split.train.interactions.size() << "\n"
          << "val\t" << split.val.interactions.size() << "\n"
          << "test\t" << split.test.interactions.size() << "\n"
          << "split_seed\t" << args.seed << "\n";
    write_text_file(fs::path(args.out) / "stats.tsv", stats.str());
    std::cout << stats.str();
    return 0;
}

// ------------------------------------------------------------------ synth

struct SynthArgs {
    pspns::SyntheticSpec spec;
    std::string out;
};

int cmd_synth(const SynthArgs& args) {
    pspns::SyntheticData data = pspns::generate_synthetic(args.spec);
    fs::create_directories(args.out);

    std::ostringstream obs;
    for (const auto& [u, p] : data.observed) obs << u << '\t' << p << '\n';
    write_text_file(fs::path(args.out) / "interactions.tsv", obs.str());

    std::ostringstream truth;
    uint64_t truth_total = 0;
    for (uint32_t u = 0; u < args.spec.n_users; ++u) {
        for (uint32_t p : data.truth[u]) truth << u << '\t' << p << '\n';
        truth_total += data.truth[u].size();
    }
    write_text_file(fs::path(args.out) / "truth.tsv", truth.str());

    std::cout << "users\t" << args.spec.n_users << "\n"
              << "items\t" << args.spec.n_items << "\n"
              << "observed\t" << data.observed.size() << "\n"
              << "flipped\t" << data.n_flipped << "\n"
              << "truth_pairs\t" << truth_total << "\n";
    return 0;
}

// ------------------------------------------------------------------ train

struct TrainArgs {
    std::string data;
    std::string config;
    std::string out;
    std::optional<uint32_t> q;
    std::optional<uint32_t> s;
    std::optional<double> a;
    std::optional<std::string> mode;
    std::optional<std::string> scheme;
    std::optional<std::string> sampler;
    std::optional<uint64_t> seed;
    std::vector<std::string> sets;  // generic key=value overrides
    bool dump_graph = false;
    bool dump_psp = false;
};

pspns::TrainConfig resolve_config(const TrainArgs& args) {
    pspns::TrainConfig cfg;
    if (!args.config.empty()) cfg = pspns::load_train_config(args.config, cfg);
    for (const std::string& kv : args.sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        pspns::apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (args.q) cfg.svd_rank = *args.q;
    if (args.s) cfg.fuse_s = *args.s;
    if (args.a) cfg.weight_a = *args.a;
    if (args.mode) cfg.mode = pspns::parse_psp_mode(*args.mode);
    if (args.scheme) cfg.scheme = pspns::parse_weight_scheme(*args.scheme);
    if (args.sampler) cfg.sampler.kind = pspns::parse_sampler_kind(*args.sampler);
    if (args.seed) cfg.seed = *args.seed;
    cfg.validate();
    return cfg;
}

json run_report(const pspns::TrainConfig& cfg, const pspns::SplitDataset& split, const pspns::RunOutcome& run) {
    json j;
    for (const auto& [k, v] : pspns::config_entries(cfg)) j["config"][k] = v;
    j["data"]["n_users"] = split.train.n_users;
    j["data"]["n_items"] = split.train.n_items;
    j["data"]["n_train"] = split.train.interactions.size();
    j["data"]["n_val"] = split.val.interactions.size();
    j["data"]["n_test"] = split.test.interactions.size();
    j["pipeline"]["psp_pairs"] = run.artifacts.psp.pairs.size();
    j["pipeline"]["psp_expanded"] = run.artifacts.psp.total_expanded;
    j["pipeline"]["removed_by_guard"] = run.artifacts.removed_by_guard;
    if (run.artifacts.factors) j["pipeline"]["svd_rank"] = run.artifacts.factors->rank;
    j["training"]["best_epoch"] = run.trained.best_epoch;
    j["training"]["best_val_recall"] = run.trained.best_metric;
    j["training"]["stopped_early"] = run.trained.stopped_early;
    j["training"]["n_evals"] = run.trained.history.size();
    j["test"] = eval_report_json(run.test);
    j["segments"]["n_inactive"] = run.n_inactive;
    j["segments"]["inactive"] = eval_report_json(run.segments.inactive);
    j["segments"]["other"] = eval_report_json(run.segments.other);
    return j;
}

int cmd_train(const TrainArgs& args) {
    pspns::TrainConfig cfg = resolve_config(args);
    pspns::SplitDataset split = pspns::load_split_cache((fs::path(args.data) / "split.bin").string());

    pspns::RunOutcome run = [&] {
        StageTimer t("train_total");
        return pspns::run_training(cfg, split);
    }();

    fs::create_directories(args.out);
    write_text_file(fs::path(args.out) / "report.json", run_report(cfg, split, run).dump(2) + "\n");

    std::ostringstream hist;
    for (const pspns::EvalPoint& pt : run.trained.history) {
        json h;
        h["epoch"] = pt.epoch;
        h["loss"] = pt.train_loss;
        for (size_t i = 0; i < pt.val.ks.size(); ++i) {
            h["recall@" + std::to_string(pt.val.ks[i])] = pt.val.recall[i];
            h["precision@" + std::to_string(pt.val.ks[i])] = pt.val.precision[i];
        }
        hist << h.dump() << "\n";
    }
    write_text_file(fs::path(args.out) / "history.jsonl", hist.str());

    {
        std::ofstream ck(fs::path(args.out) / "model.bin", std::ios::binary);
        if (!ck) throw std::runtime_error("cannot open model.bin");
        pspns::save_checkpoint(run.trained.model, ck);
    }
    if (args.dump_graph && run.artifacts.fused) {
        std::ofstream gf(fs::path(args.out) / "fused_graph.tsv");
        pspns::export_weighted_graph(*run.artifacts.fused, gf);
    }
    if (args.dump_psp) {
        std::ofstream pf(fs::path(args.out) / "psp.tsv");
        pspns::export_psp(run.artifacts.psp, pf);
    }

    std::cout << "mode=" << pspns::to_string(cfg.mode) << " scheme=" << pspns::to_string(cfg.scheme)
              << " seed=" << cfg.seed << "\n"
              << "best_epoch=" << run.trained.best_epoch << " evals=" << run.trained.history.size()
              << (run.trained.stopped_early ? " (early stop)" : "") << "\n"
              << "test: " << metric_line(run.test) << "\n"
              << "inactive[" << run.n_inactive << "]: " << metric_line(run.segments.inactive) << "\n";
    return 0;
}

// ----------------------------------------------------------------- ablate

struct AblateArgs {
    std::string data;
    std::string config;
    std::string grid = "all";
    std::string seeds = "0..4";
    std::string out;
    std::vector<std::string> sets;
};

// grid: "all" or "mode1,mode2:scheme1,scheme2"
void parse_grid(const std::string& spec, std::vector<pspns::PspMode>& modes,
                std::vector<pspns::WeightScheme>& schemes) {
    if (spec == "all") {
        modes = {pspns::PspMode::one_hop, pspns::PspMode::one_hop_x2, pspns::PspMode::svd_hop,
                 pspns::PspMode::w_hop, pspns::PspMode::w_hop_lw, pspns::PspMode::w_ew};
        schemes = {pspns::WeightScheme::none, pspns::WeightScheme::log, pspns::WeightScheme::isw,
                   pspns::WeightScheme::edw, pspns::WeightScheme::crw};
        return;
    }
    size_t colon = spec.find(':');
    if (colon == std::string::npos)
        throw std::invalid_argument("grid must be 'all' or 'modes:schemes'");
    std::stringstream ms(spec.substr(0, colon)), ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ms, tok, ',')) modes.push_back(pspns::parse_psp_mode(tok));
    while (std::getline(ss, tok, ',')) schemes.push_back(pspns::parse_weight_scheme(tok));
    if (modes.empty() || schemes.empty()) throw std::invalid_argument("grid has an empty axis");
}

int cmd_ablate(const AblateArgs& args) {
    pspns::TrainConfig base;
    if (!args.config.empty()) base = pspns::load_train_config(args.config, base);
    for (const std::string& kv : args.sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
        pspns::apply_config_entry(base, kv.substr(0, eq), kv.substr(eq + 1));
    }
    std::vector<pspns::PspMode> modes;
    std::vector<pspns::WeightScheme> schemes;
    parse_grid(args.grid, modes, schemes);
    std::vector<uint64_t> seeds = parse_seeds(args.seeds);

    pspns::SplitDataset split = pspns::load_split_cache((fs::path(args.data) / "split.bin").string());
    fs::create_directories(args.out);

    std::ostringstream rows, summary;
    rows << "mode\tscheme\tseed";
    summary << "mode\tscheme";
    for (uint32_t k : base.ks) rows << "\trecall@" << k << "\tprecision@" << k;
    for (uint32_t k : base.ks) summary << "\trecall@" << k << "\tprecision@" << k;
    rows << "\n";
    summary << "\n";

    rows << std::setprecision(17);
    summary << std::setprecision(17);
    for (pspns::PspMode mode : modes) {
        for (pspns::WeightScheme scheme : schemes) {
            std::vector<double> mean_r(base.ks.size(), 0.0), mean_p(base.ks.size(), 0.0);
            for (uint64_t seed : seeds) {
                pspns::TrainConfig cfg = base;
                cfg.mode = mode;
                cfg.scheme = scheme;
                cfg.seed = seed;
                cfg.validate();
                StageTimer t(std::string("cell ") + pspns::to_string(mode) + "/" + pspns::to_string(scheme) +
                             "/seed" + std::to_string(seed));
                pspns::RunOutcome run = pspns::run_training(cfg, split);
                rows << pspns::to_string(mode) << '\t' << pspns::to_string(scheme) << '\t' << seed;
                for (size_t i = 0; i < base.ks.size(); ++i) {
                    rows << '\t' << run.test.recall[i] << '\t' << run.test.precision[i];
                    mean_r[i] += run.test.recall[i];
                    mean_p[i] += run.test.precision[i];
                }
                rows << "\n";
            }
            summary << pspns::to_string(mode) << '\t' << pspns::to_string(scheme);
            for (size_t i = 0; i < base.ks.size(); ++i)
                summary << '\t' << mean_r[i] / seeds.size() << '\t' << mean_p[i] / seeds.size();
            summary << "\n";
        }
    }
    write_text_file(fs::path(args.out) / "ablation.tsv", rows.str());
    write_text_file(fs::path(args.out) / "summary.tsv", summary.str());
    std::cout << summary.str();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"positive-sample-pair construction and weighted BPR training"};
    app.require_subcommand(1);

    PrepareArgs prep;
    CLI::App* prepare = app.add_subcommand("prepare", "load interactions, split, cache");
    prepare->add_option("--input", prep.input, "interaction file")->required();
    prepare->add_option("--format", prep.format, "tsv|csv");
    prepare->add_option("--ratios", prep.ratios, "train,val,test fractions");
    prepare->add_option("--seed", prep.seed, "split seed");
    prepare->add_option("--out", prep.out, "output directory")->required();

    SynthArgs synth;
    CLI::App* synth_cmd = app.add_subcommand("synth", "generate a planted-block dataset");
    synth_cmd->add_option("--users", synth.spec.n_users)->required();
    synth_cmd->add_option("--items", synth.spec.n_items)->required();
    synth_cmd->add_option("--blocks", synth.spec.n_blocks)->required();
    synth_cmd->add_option("--density-in", synth.spec.density_in)->required();
    synth_cmd->add_option("--density-out", synth.spec.density_out)->required();
    synth_cmd->add_option("--noise", synth.spec.noise_rate);
    synth_cmd->add_option("--skew", synth.spec.activity_skew);
    synth_cmd->add_option("--seed", synth.spec.seed);
    synth_cmd->add_option("--out", synth.out, "output directory")->required();

    TrainArgs tr;
    CLI::App* train_cmd = app.add_subcommand("train", "run the full pipeline and trainer");
    train_cmd->add_option("--data", tr.data, "directory with split.bin")->required();
    train_cmd->add_option("--config", tr.config, "key=value config file");
    train_cmd->add_option("--out", tr.out, "output directory")->required();
    uint32_t q_val = 0, s_val = 0;
    double a_val = 0.0;
    uint64_t seed_val = 0;
    std::string mode_val, scheme_val, sampler_val;
    auto* q_opt = train_cmd->add_option("--q", q_val, "svd rank");
    auto* s_opt = train_cmd->add_option("--s", s_val, "fusion weight");
    auto* a_opt = train_cmd->add_option("--a", a_val, "weight sensitivity");
    auto* mode_opt = train_cmd->add_option("--mode", mode_val, "psp mode");
    auto* scheme_opt = train_cmd->add_option("--scheme", scheme_val, "weight scheme");
    auto* sampler_opt = train_cmd->add_option("--sampler", sampler_val, "negative sampler");
    auto* seed_opt = train_cmd->add_option("--seed", seed_val, "root seed");
    train_cmd->add_option("--set", tr.sets, "extra key=value overrides");
    train_cmd->add_flag("--dump-graph", tr.dump_graph, "write fused_graph.tsv");
    train_cmd->add_flag("--dump-psp", tr.dump_psp, "write psp.tsv");

    AblateArgs ab;
    CLI::App* ablate_cmd = app.add_subcommand("ablate", "run a mode x scheme x seed grid");
    ablate_cmd->add_option("--data", ab.data, "directory with split.bin")->required();
    ablate_cmd->add_option("--config", ab.config, "key=value config file");
    ablate_cmd->add_option("--grid", ab.grid, "'all' or modes:schemes");
    ablate_cmd->add_option("--seeds", ab.seeds, "range 'a..b' or comma list");
    ablate_cmd->add_option("--out", ab.out, "output directory")->required();
    ablate_cmd->add_option("--set", ab.sets, "extra key=value overrides");

    try {
        app.parse(argc, argv);
        if (*prepare) return cmd_prepare(prep);
        if (*synth_cmd) return cmd_synth(synth);
        if (*train_cmd) {
            if (*q_opt) tr.q = q_val;
            if (*s_opt) tr.s = s_val;
            if (*a_opt) tr.a = a_val;
            if (*mode_opt) tr.mode = mode_val;
            if (*scheme_opt) tr.scheme = scheme_val;
            if (*sampler_opt) tr.sampler = sampler_val;
            if (*seed_opt) tr.seed = seed_val;
            return cmd_train(tr);
        }
        if (*ablate_cmd) return cmd_ablate(ab);
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
