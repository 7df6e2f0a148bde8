#include "commands.hpp"

#include "fairsvt/binio.hpp"
#include "fairsvt/checkpoint.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace fairsvt::cli {

using nlohmann::json;

namespace {

constexpr const char* kStatusFile = "status.txt";
constexpr const char* kSweepSpecFile = "sweep_spec.json";

bool is_empty_or_absent(const fs::path& dir) {
    if (!fs::exists(dir)) return true;
    if (!fs::is_directory(dir)) return false;
    return fs::directory_iterator(dir) == fs::directory_iterator();
}

std::string fmt_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string short_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", x);
    return buf;
}

TrainConfig load_train_config(const std::optional<fs::path>& path) {
    if (!path) return TrainConfig{};
    return train_config_from_json(read_json_file(*path));
}

/// Trains into `dir`. history.csv grows while training; report.json is written
/// last and marks the run complete.
RunRecord train_into(const fs::path& dir, const TrainConfig& cfg, std::span<const PreparedSong> train_split,
                     std::span<const PreparedSong> test_split) {
    fs::create_directories(dir);
    write_json_file(dir / kRunConfigFile, to_json(cfg));
    std::ofstream hist(dir / kHistoryFile);
    if (!hist) throw std::runtime_error("cannot write " + (dir / kHistoryFile).string());
    hist << "step,L_y,L_A\n";
    const std::string tag = dir.filename().string();
    RunRecord rec = train_prepared(train_split, cfg, [&](const HistoryRow& row) {
        hist << row.step << ',' << fmt_double(row.loss_y) << ',' << (row.loss_a ? fmt_double(*row.loss_a) : "")
             << '\n';
        if (row.step % 100 == 0)
            spdlog::info("[{}] step {}/{} L_y {:.4f}{}", tag, row.step, cfg.total_steps(), row.loss_y,
                         row.loss_a ? fmt::format(" L_A {:.4f}", *row.loss_a) : "");
        else
            spdlog::debug("[{}] step {} L_y {:.6f}", tag, row.step, row.loss_y);
    });
    hist.close();
    nn::write_checkpoint(dir / kCheckpointFile, rec.model.named_parameters());
    rec.report = evaluate(rec.model, test_split, TranscribeOptions{cfg.postproc, cfg.dind_inference});
    write_json_file(dir / kReportFile, to_json(*rec.report));
    const auto& conp = rec.report->at(MatchMode::COnP);
    spdlog::info("[{}] done: U_COnP {:.4f} F_COnP {}", tag, conp.utility,
                 conp.fairness ? fmt::format("{:+.4f}", *conp.fairness) : "undefined");
    return rec;
}

void write_status(const fs::path& dir, const std::string& status) {
    fs::create_directories(dir);
    std::ofstream(dir / kStatusFile) << status << '\n';
}

struct PreparedCorpus {
    std::vector<PreparedSong> train, test;
};

PreparedCorpus prepare_corpus(const fs::path& dir, const TrainConfig& cfg) {
    const Corpus corpus = read_corpus(dir);
    return {prepare_songs(corpus.train, cfg.frontend, cfg.model.octaves),
            prepare_songs(corpus.test, cfg.frontend, cfg.model.octaves)};
}

}  // namespace

std::string run_name(Method method, double eta3, double lambda, std::uint64_t seed) {
    return std::string(method_name(method)) + "_eta" + short_double(eta3) + "_lam" + short_double(lambda) + "_s" +
           std::to_string(seed);
}

void cmd_gen(const std::optional<fs::path>& config, const fs::path& out, std::optional<std::uint64_t> seed) {
    CorpusConfig cfg = config ? corpus_config_from_json(read_json_file(*config)) : CorpusConfig{};
    if (seed) cfg.seed = *seed;
    validate(cfg);
    if (!is_empty_or_absent(out)) throw ConfigError("output directory " + out.string() + " is not empty");

    const Corpus corpus = build_corpus(cfg);
    fs::path tmp = out;
    tmp += ".partial";
    fs::remove_all(tmp);
    try {
        write_corpus(corpus, tmp);
        write_json_file(tmp / "corpus_config.json", to_json(cfg));
        if (fs::exists(out)) fs::remove(out);  // empty directory
        fs::rename(tmp, out);
    } catch (...) {
        fs::remove_all(tmp);
        throw;
    }
    spdlog::info("wrote {} train and {} test songs to {}", corpus.train.size(), corpus.test.size(), out.string());
}

RunRecord cmd_train(const fs::path& corpus, const std::optional<fs::path>& config, const fs::path& run_dir,
                    std::optional<std::uint64_t> seed) {
    TrainConfig cfg = load_train_config(config);
    if (seed) cfg.seed = *seed;
    if (!is_empty_or_absent(run_dir))
        throw ConfigError("run directory " + run_dir.string() + " is not empty (resuming is not supported)");
    const PreparedCorpus data = prepare_corpus(corpus, cfg);
    return train_into(run_dir, cfg, data.train, data.test);
}

SvtModel load_run_model(const fs::path& run_dir, TrainConfig* cfg_out) {
    const TrainConfig cfg = train_config_from_json(read_json_file(run_dir / kRunConfigFile));
    Rng rng(cfg.seed);
    SvtModel model = init_model(cfg, rng);
    model.load(nn::read_checkpoint(run_dir / kCheckpointFile));
    if (cfg_out) *cfg_out = cfg;
    return model;
}

FairnessReport cmd_eval(const fs::path& run_dir, const fs::path& corpus, std::optional<MatchMode> mode,
                        const std::optional<fs::path>& out) {
    TrainConfig cfg;
    const SvtModel model = load_run_model(run_dir, &cfg);
    const Corpus c = read_corpus(corpus);
    const auto test = prepare_songs(c.test, cfg.frontend, cfg.model.octaves);
    std::vector<SongTranscription> results;
    for (const auto& s : test)
        results.push_back({s.id, s.attribute, s.notes,
                           transcribe(model, s.features, TranscribeOptions{cfg.postproc, cfg.dind_inference},
                                      s.attribute)});
    std::vector<MatchMode> modes(kAllModes.begin(), kAllModes.end());
    if (mode) modes = {*mode};
    FairnessReport report = fairness_report(results, Tolerances{}, modes);
    write_json_file(out ? *out : run_dir / kReportFile, to_json(report));
    for (const auto& m : report.modes)
        spdlog::info("{}: U {:.4f} F {}", mode_name(m.mode), m.utility,
                     m.fairness ? fmt::format("{:+.4f}", *m.fairness) : "undefined");
    return report;
}

namespace {

struct GridPoint {
    Method method;
    double eta3, lambda;
    std::uint64_t seed;
};

std::vector<GridPoint> grid(const SweepSpec& spec) {
    std::vector<GridPoint> out;
    for (Method m : spec.methods)
        for (double e : spec.eta3)
            for (double l : spec.lambda)
                for (auto s : spec.seeds) out.push_back({m, e, l, s});
    return out;
}

fs::path baseline_dir(const fs::path& sweep_dir, const SweepSpec& spec) {
    return spec.baseline_run ? fs::path(*spec.baseline_run) : sweep_dir / "baseline";
}

std::string read_status(const fs::path& dir) {
    if (fs::exists(dir / kReportFile)) return "ok";
    std::ifstream in(dir / kStatusFile);
    std::string word;
    if (in >> word) return word;
    return "missing";
}

void write_tradeoff_csv(const fs::path& path, const SweepSummary& s) {
    std::ofstream out(path);
    out << "method,eta3,lambda,seed,status,U_COnPOff,F_COnPOff,U_COnP,F_COnP,qualified_COnPOff,qualified_COnP\n";
    const double u0_off = s.baseline.at(MatchMode::COnPOff).utility;
    const double u0_p = s.baseline.at(MatchMode::COnP).utility;
    for (const auto& r : s.rows) {
        out << method_name(r.method) << ',' << short_double(r.eta3) << ',' << short_double(r.lambda) << ',' << r.seed
            << ',' << r.status;
        if (r.report) {
            const auto& off = r.report->at(MatchMode::COnPOff);
            const auto& p = r.report->at(MatchMode::COnP);
            auto f = [](const ModeReport& m) { return m.fairness ? fmt_double(*m.fairness) : std::string(); };
            out << ',' << fmt_double(off.utility) << ',' << f(off) << ',' << fmt_double(p.utility) << ',' << f(p)
                << ',' << (off.utility > u0_off - s.delta ? 1 : 0) << ',' << (p.utility > u0_p - s.delta ? 1 : 0);
        } else {
            out << ",,,,,0,0";
        }
        out << '\n';
    }
}

json selection_json(const SweepSummary& s) {
    json sel = {{"delta", s.delta}, {"baseline", json::object()}, {"selected", json::object()}};
    for (MatchMode mode : {MatchMode::COnPOff, MatchMode::COnP}) {
        const auto& b = s.baseline.at(mode);
        sel["baseline"][mode_name(mode)] = {{"U", b.utility}, {"F", b.fairness ? json(*b.fairness) : json(nullptr)}};
        json per_method = json::object();
        std::map<std::string, std::vector<const SweepRow*>> by_method;
        for (const auto& r : s.rows)
            if (r.report && r.report->at(mode).fairness) by_method[method_name(r.method)].push_back(&r);
        for (const auto& [method, rows] : by_method) {
            std::vector<UtilityFairness> uf;
            for (const SweepRow* r : rows) uf.push_back({r->report->at(mode).utility, *r->report->at(mode).fairness});
            const auto idx = tradeoff_select(uf, b.utility, s.delta);
            if (!idx) {
                per_method[method] = {{"verdict", "none_qualified"}};
                continue;
            }
            const SweepRow& r = *rows[*idx];
            per_method[method] = {{"verdict", "selected"}, {"run", r.run},           {"eta3", r.eta3},
                                  {"lambda", r.lambda},    {"seed", r.seed},         {"U", uf[*idx].utility},
                                  {"F", uf[*idx].fairness}};
        }
        sel["selected"][mode_name(mode)] = per_method;
    }
    return sel;
}

const char* method_color(Method m) {
    switch (m) {
        case Method::Erm: return "#000000";
        case Method::Al: return "#7f7f7f";
        case Method::NcalV1: return "#1f77b4";
        case Method::NcalV2: return "#d62728";
        case Method::Dind: return "#2ca02c";
    }
    return "#000000";
}

/// Two scatter panels of (U, F), one per pitch-aware mode.
void write_svg(const fs::path& path, const SweepSummary& s) {
    constexpr double W = 420, H = 320, M = 48;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << 2 * W << "\" height=\"" << H + 40
        << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    int panel = 0;
    for (MatchMode mode : {MatchMode::COnPOff, MatchMode::COnP}) {
        const double ox = panel++ * W;
        const auto& base = s.baseline.at(mode);
        std::vector<std::pair<double, double>> pts;
        pts.emplace_back(base.utility, base.fairness.value_or(0));
        for (const auto& r : s.rows)
            if (r.report && r.report->at(mode).fairness)
                pts.emplace_back(r.report->at(mode).utility, *r.report->at(mode).fairness);
        double u_lo = base.utility - s.delta, u_hi = base.utility, f_lo = 0, f_hi = 0;
        for (auto [u, f] : pts) {
            u_lo = std::min(u_lo, u);
            u_hi = std::max(u_hi, u);
            f_lo = std::min(f_lo, f);
            f_hi = std::max(f_hi, f);
        }
        const double pu = std::max(0.02, 0.08 * (u_hi - u_lo)), pf = std::max(0.02, 0.08 * (f_hi - f_lo));
        u_lo -= pu, u_hi += pu, f_lo -= pf, f_hi += pf;
        auto X = [&](double u) { return ox + M + (u - u_lo) / (u_hi - u_lo) * (W - 1.5 * M); };
        auto Y = [&](double f) { return H - M + 20 - (f - f_lo) / (f_hi - f_lo) * (H - 1.5 * M); };
        svg << "<text x=\"" << ox + W / 2 << "\" y=\"16\" text-anchor=\"middle\" font-size=\"13\">" << mode_name(mode)
            << "</text>\n";
        svg << "<rect x=\"" << X(u_lo) << "\" y=\"" << Y(f_hi) << "\" width=\"" << X(u_hi) - X(u_lo)
            << "\" height=\"" << Y(f_lo) - Y(f_hi) << "\" fill=\"none\" stroke=\"#444\"/>\n";
        svg << "<line x1=\"" << X(u_lo) << "\" x2=\"" << X(u_hi) << "\" y1=\"" << Y(0) << "\" y2=\"" << Y(0)
            << "\" stroke=\"#bbb\"/>\n";
        const double cut = base.utility - s.delta;
        svg << "<line x1=\"" << X(cut) << "\" x2=\"" << X(cut) << "\" y1=\"" << Y(f_lo) << "\" y2=\"" << Y(f_hi)
            << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
        svg << "<text x=\"" << (X(u_lo) + X(u_hi)) / 2 << "\" y=\"" << H + 30
            << "\" text-anchor=\"middle\">U (total f1)</text>\n";
        svg << "<text x=\"" << ox + 14 << "\" y=\"" << (Y(f_lo) + Y(f_hi)) / 2 << "\" transform=\"rotate(-90 "
            << ox + 14 << ' ' << (Y(f_lo) + Y(f_hi)) / 2 << ")\" text-anchor=\"middle\">F (male - female f1)</text>\n";
        for (auto [v, anchor] : {std::pair{u_lo, "start"}, std::pair{u_hi, "end"}})
            svg << "<text x=\"" << X(v) << "\" y=\"" << Y(f_lo) + 13 << "\" text-anchor=\"" << anchor << "\">"
                << short_double(std::round(v * 1000) / 1000) << "</text>\n";
        for (double v : {f_lo, f_hi})
            svg << "<text x=\"" << X(u_lo) - 4 << "\" y=\"" << Y(v) + 4 << "\" text-anchor=\"end\">"
                << short_double(std::round(v * 1000) / 1000) << "</text>\n";
        for (const auto& r : s.rows) {
            if (!r.report || !r.report->at(mode).fairness) continue;
            const auto& m = r.report->at(mode);
            svg << "<circle cx=\"" << X(m.utility) << "\" cy=\"" << Y(*m.fairness) << "\" r=\"4\" fill=\""
                << method_color(r.method) << "\" fill-opacity=\"0.7\"><title>" << r.run << "</title></circle>\n";
        }
        svg << "<rect x=\"" << X(base.utility) - 5 << "\" y=\"" << Y(base.fairness.value_or(0)) - 5
            << "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"#000\" stroke-width=\"2\"><title>baseline (erm)"
            << "</title></rect>\n";
    }
    double lx = 10;
    for (Method m : {Method::Al, Method::NcalV1, Method::NcalV2, Method::Dind}) {
        svg << "<circle cx=\"" << lx << "\" cy=\"" << H + 46 << "\" r=\"4\" fill=\"" << method_color(m) << "\"/>"
            << "<text x=\"" << lx + 8 << "\" y=\"" << H + 50 << "\">" << method_name(m) << "</text>\n";
        lx += 80;
    }
    svg << "</svg>\n";
    std::ofstream(path) << svg.str();
}

}  // namespace

SweepSummary cmd_report(const fs::path& sweep_dir, std::optional<double> delta) {
    const SweepSpec spec = sweep_spec_from_json(read_json_file(sweep_dir / kSweepSpecFile));
    SweepSummary s;
    s.delta = delta.value_or(spec.delta);
    if (!(s.delta >= 0)) throw ConfigError("delta must be >= 0");
    const fs::path bdir = baseline_dir(sweep_dir, spec);
    if (!fs::exists(bdir / kReportFile)) throw std::runtime_error("baseline run has no report: " + bdir.string());
    s.baseline = report_from_json(read_json_file(bdir / kReportFile));
    for (const auto& g : grid(spec)) {
        SweepRow row{run_name(g.method, g.eta3, g.lambda, g.seed), g.method, g.eta3, g.lambda, g.seed, "", {}};
        const fs::path dir = sweep_dir / "runs" / row.run;
        row.status = read_status(dir);
        if (row.status == "ok") row.report = report_from_json(read_json_file(dir / kReportFile));
        if (row.status == "diverged") s.any_diverged = true;
        s.rows.push_back(std::move(row));
    }
    write_tradeoff_csv(sweep_dir / "tradeoff.csv", s);
    write_json_file(sweep_dir / "selected.json", selection_json(s));
    write_svg(sweep_dir / "tradeoff.svg", s);
    return s;
}

SweepSummary cmd_sweep(const fs::path& spec_path, const fs::path& corpus, const fs::path& out, int jobs,
                       std::optional<double> delta, std::optional<std::uint64_t> seed) {
    SweepSpec spec = sweep_spec_from_json(read_json_file(spec_path));
    if (seed) spec.seeds = {*seed};
    if (delta) spec.delta = *delta;
    validate(spec);
    if (jobs < 1) throw ConfigError("--jobs must be >= 1");

    fs::create_directories(out);
    const json resolved = to_json(spec);
    if (fs::exists(out / kSweepSpecFile)) {
        if (read_json_file(out / kSweepSpecFile) != resolved)
            throw ConfigError("output directory holds a different sweep; refusing to mix results");
    } else {
        write_json_file(out / kSweepSpecFile, resolved);
    }

    const PreparedCorpus data = prepare_corpus(corpus, spec.base);

    const fs::path bdir = baseline_dir(out, spec);
    if (!fs::exists(bdir / kReportFile)) {
        if (spec.baseline_run) throw ConfigError("baseline run has no report.json: " + bdir.string());
        TrainConfig cfg = spec.base;
        cfg.method = Method::Erm;
        cfg.seed = spec.seeds.front();
        fs::remove_all(bdir);
        spdlog::info("training erm baseline");
        train_into(bdir, cfg, data.train, data.test);
    }

    std::vector<GridPoint> todo;
    for (const auto& g : grid(spec)) {
        const fs::path dir = out / "runs" / run_name(g.method, g.eta3, g.lambda, g.seed);
        if (fs::exists(dir / kReportFile)) continue;  // finished earlier
        fs::remove_all(dir);
        todo.push_back(g);
    }
    spdlog::info("{} runs to train, {} already complete", todo.size(), grid(spec).size() - todo.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < todo.size(); i = next++) {
            const GridPoint& g = todo[i];
            TrainConfig cfg = spec.base;
            cfg.method = g.method;
            cfg.lr_attr = g.eta3;
            cfg.lambda = g.lambda;
            cfg.seed = g.seed;
            const fs::path dir = out / "runs" / run_name(g.method, g.eta3, g.lambda, g.seed);
            try {
                train_into(dir, cfg, data.train, data.test);
            } catch (const DivergenceError& e) {
                spdlog::error("[{}] {}", dir.filename().string(), e.what());
                write_status(dir, std::string("diverged ") + e.what());
            } catch (const std::exception& e) {
                spdlog::error("[{}] failed: {}", dir.filename().string(), e.what());
                write_status(dir, std::string("failed ") + e.what());
            }
        }
    };
    const int n_threads = static_cast<int>(std::min<std::size_t>(jobs, std::max<std::size_t>(todo.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    return cmd_report(out, spec.delta);
}

namespace {

spdlog::level::level_enum log_level_from_env() {
    const char* v = std::getenv("FAIRSVT_LOG");
    if (!v || !*v) return spdlog::level::info;
    const std::string s = v;
    if (s == "error") return spdlog::level::err;
    if (s == "info") return spdlog::level::info;
    if (s == "debug") return spdlog::level::debug;
    throw ConfigError("FAIRSVT_LOG must be error, info or debug (got '" + s + "')");
}

void print_summary(const SweepSummary& s) {
    std::printf("%-36s %-9s %9s %9s %9s %9s\n", "run", "status", "U_COnPOff", "F_COnPOff", "U_COnP", "F_COnP");
    auto line = [](const std::string& name, const std::string& status, const FairnessReport* r) {
        if (!r) {
            std::printf("%-36s %-9s\n", name.c_str(), status.c_str());
            return;
        }
        const auto& a = r->at(MatchMode::COnPOff);
        const auto& b = r->at(MatchMode::COnP);
        std::printf("%-36s %-9s %9.4f %+9.4f %9.4f %+9.4f\n", name.c_str(), status.c_str(), a.utility,
                    a.fairness.value_or(0), b.utility, b.fairness.value_or(0));
    };
    line("baseline", "ok", &s.baseline);
    for (const auto& r : s.rows) line(r.run, r.status, r.report ? &*r.report : nullptr);
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Fairness-aware singing voice transcription toolkit"};
    app.require_subcommand(1);

    std::optional<std::string> config, corpus, out_opt;
    std::string out, target;
    std::optional<std::uint64_t> seed;
    std::optional<double> delta;
    std::optional<std::string> mode;
    int jobs = 1;

    auto* gen = app.add_subcommand("gen", "synthesize a corpus");
    gen->add_option("--config", config, "corpus config (JSON)");
    gen->add_option("--out", out, "output corpus directory")->required();
    gen->add_option("--seed", seed, "override the corpus seed");

    auto* train = app.add_subcommand("train", "train one run");
    train->add_option("--corpus", corpus, "corpus directory")->required();
    train->add_option("--config", config, "train config (JSON)");
    train->add_option("--out", out, "run directory (must be empty or absent)")->required();
    train->add_option("--seed", seed, "override the training seed");

    auto* eval = app.add_subcommand("eval", "score a trained run on the test split");
    eval->add_option("run_dir", target, "run directory")->required();
    eval->add_option("--corpus", corpus, "corpus directory")->required();
    eval->add_option("--mode", mode, "restrict to one metric: con, conp or conpoff");
    eval->add_option("--out", out_opt, "report path (default <run_dir>/report.json)");

    auto* sweep = app.add_subcommand("sweep", "grid over methods, eta3 and lambda");
    sweep->add_option("--config", config, "sweep spec (JSON)")->required();
    sweep->add_option("--corpus", corpus, "corpus directory")->required();
    sweep->add_option("--out", out, "sweep directory")->required();
    sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
    sweep->add_option("--delta", delta, "utility tolerance (f1 fraction)");
    sweep->add_option("--seed", seed, "run a single seed");

    auto* report = app.add_subcommand("report", "rebuild the trade-off table of a sweep");
    report->add_option("sweep_dir", target, "sweep directory")->required();
    report->add_option("--delta", delta, "utility tolerance (f1 fraction)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        auto logger = spdlog::get("fairsvt");
        if (!logger) logger = spdlog::stderr_color_mt("fairsvt");
        spdlog::set_default_logger(logger);
        spdlog::set_level(log_level_from_env());

        auto opt_path = [](const std::optional<std::string>& s) -> std::optional<fs::path> {
            return s ? std::optional<fs::path>(*s) : std::nullopt;
        };
        if (*gen) {
            cmd_gen(opt_path(config), out, seed);
        } else if (*train) {
            cmd_train(*corpus, opt_path(config), out, seed);
        } else if (*eval) {
            std::optional<MatchMode> m;
            if (mode) {
                try {
                    m = mode_from_name(*mode);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(e.what());
                }
            }
            const FairnessReport r = cmd_eval(target, *corpus, m, opt_path(out_opt));
            std::printf("%s\n", to_json(r).dump(2).c_str());
        } else if (*sweep) {
            const SweepSummary s = cmd_sweep(*config, *corpus, out, jobs, delta, seed);
            print_summary(s);
            if (s.any_diverged) return kDiverged;
        } else if (*report) {
            print_summary(cmd_report(target, delta));
        }
        return kOk;
    } catch (const DivergenceError& e) {
        spdlog::error("{}", e.what());
        return kDiverged;
    } catch (const ConfigError& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const CorpusError& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const binio::FormatError& e) {
        spdlog::error("{}", e.what());
        return kConfigError;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return kFailure;
    }
}

}  // namespace fairsvt::cli
