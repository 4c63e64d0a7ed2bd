#pragma once

#include <CLI11.hpp>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "corrprop/csvio.hpp"
#include "corrprop/init.hpp"
#include "corrprop/manifest.hpp"
#include "corrprop/meanfield.hpp"
#include "corrprop/propagate.hpp"
#include "corrprop/quadrature.hpp"
#include "corrprop/train.hpp"

// CLI entry point. Every subcommand writes its outputs plus a manifest.json
// into the run directory (--out, default under $CORRPROP_OUT or ./runs).
// Rerunning with --config <previous manifest.json> and the same seed in
// serial mode reproduces every output file byte for byte.

namespace corrprop::cli {

namespace fs = std::filesystem;

/// Numeric range grammar "start:stop:step": inclusive of start, exclusive of
/// stop. A bare number is the single-point range.
inline std::vector<double> parse_range(const std::string& text) {
    const auto c1 = text.find(':');
    if (c1 == std::string::npos) return {std::stod(text)};
    const auto c2 = text.find(':', c1 + 1);
    if (c2 == std::string::npos)
        throw std::invalid_argument("range must be start:stop:step, got: " + text);
    const double start = std::stod(text.substr(0, c1));
    const double stop = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
    const double step = std::stod(text.substr(c2 + 1));
    if (!(step > 0)) throw std::invalid_argument("range step must be > 0");
    std::vector<double> out;
    const auto count = static_cast<long>(std::ceil((stop - start) / step - 1e-9));
    for (long i = 0; i < count; ++i) out.push_back(start + static_cast<double>(i) * step);
    if (out.empty()) throw std::invalid_argument("empty range: " + text);
    return out;
}

inline std::string default_out_root() {
    if (const char* env = std::getenv("CORRPROP_OUT")) return env;
    return "runs";
}

inline void emit_curve_csv(const mc::LayerStatsCurve& curve, const std::string& path) {
    csv::Writer w(path);
    w.row("layer", "mean_q", "std_q", "mean_c", "std_c");
    for (Eigen::Index l = 0; l < curve.layers; ++l)
        w.row(static_cast<int>(l + 1), curve.mean_q[l], curve.std_q[l], curve.mean_c[l],
              curve.std_c[l]);
}

inline void emit_curve_csv(const nn::TrainRun& run, const std::string& path) {
    csv::Writer w(path);
    w.row("epoch", "train_loss", "val_loss");
    for (std::size_t e = 0; e < run.val_loss.size(); ++e)
        w.row(static_cast<int>(e + 1), run.train_loss[e], run.val_loss[e]);
}

namespace detail {

struct Common {
    std::string out;
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string preset = "desk";

    void attach(CLI::App* cmd) {
        cmd->add_option("--out", out, "run directory (default <root>/<command>)");
        cmd->add_option("--config", config_path,
                        "JSON config file or a previous manifest.json to rerun");
        cmd->add_option("--seed", seed, "global seed");
        cmd->add_option("--threads", threads, "worker threads (1 = serial)");
        cmd->add_option("--preset", preset, "paper|desk scale preset")
            ->check(CLI::IsMember({"paper", "desk"}));
    }

    fs::path run_dir() const {
        fs::path dir(out);
        fs::create_directories(dir);
        return dir;
    }

    /// Loads --config if given; a manifest.json is unwrapped to its embedded
    /// config snapshot.
    std::optional<nlohmann::json> load_config() const {
        if (config_path.empty()) return {};
        nlohmann::json j = load_json(config_path);
        if (j.contains("config") && j.contains("outputs")) {
            if (j.contains("seed")) {
                nlohmann::json c = j["config"];
                c["__seed"] = j["seed"];
                return c;
            }
            return j["config"];
        }
        return j;
    }
};

inline InitScheme scheme_from_flags(const std::string& family, double s2w, double s2b, double k) {
    InitScheme s;
    s.family = family_from_name(family);
    if (s.family == Family::He) k = 0.0;
    if (s.family == Family::RAI) k = 0.0;
    s.sigma2_w = s2w;
    s.sigma2_b = s2b;
    s.k = k;
    s.validate();
    return s;
}

inline mc::PropagationConfig prop_config(const Common& common, const InitScheme& scheme,
                                         Eigen::Index width, Eigen::Index depth,
                                         Eigen::Index inputs, int networks, double c0) {
    mc::PropagationConfig cfg = common.preset == "paper"
                                    ? mc::PropagationConfig::paper(scheme, common.seed)
                                    : mc::PropagationConfig::desk(scheme, common.seed);
    if (width > 0) cfg.width = width;
    if (depth > 0) cfg.depth = depth;
    if (inputs > 0) cfg.n_inputs = inputs;
    if (networks > 0) cfg.n_networks = networks;
    cfg.input_correlation = c0;
    return cfg;
}

inline nlohmann::json prop_config_json(const mc::PropagationConfig& cfg) {
    return {{"scheme", cfg.scheme},
            {"width", cfg.width},
            {"depth", cfg.depth},
            {"n_inputs", cfg.n_inputs},
            {"n_networks", cfg.n_networks},
            {"input_correlation", cfg.input_correlation},
            {"seed", cfg.seed}};
}

inline mc::PropagationConfig prop_config_from_json(const nlohmann::json& j) {
    mc::PropagationConfig cfg;
    cfg.scheme = j.at("scheme").get<InitScheme>();
    cfg.width = j.at("width").get<Eigen::Index>();
    cfg.depth = j.at("depth").get<Eigen::Index>();
    cfg.n_inputs = j.at("n_inputs").get<Eigen::Index>();
    cfg.n_networks = j.at("n_networks").get<int>();
    cfg.input_correlation = j.at("input_correlation").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.validate();
    return cfg;
}

}  // namespace detail

// --- subcommand bodies ------------------------------------------------------

inline int run_phase_diagram(detail::Common& common, const std::string& s2w_range,
                             const std::string& s2b_range, double k, double tol, int max_iter) {
    RunManifest man;
    man.command = "phase-diagram";
    man.started = iso8601_now();
    man.seed = common.seed;
    man.threads = common.threads;

    std::vector<double> s2ws = parse_range(s2w_range);
    std::vector<double> s2bs = parse_range(s2b_range);
    if (auto cfg = common.load_config()) {
        s2ws.clear();
        s2bs.clear();
        for (double v : (*cfg)["sigma2_w"]) s2ws.push_back(v);
        for (double v : (*cfg)["sigma2_b"]) s2bs.push_back(v);
        k = (*cfg)["k"];
        tol = (*cfg)["tol"];
        max_iter = (*cfg)["max_iter"];
    }
    man.config = {{"sigma2_w", s2ws}, {"sigma2_b", s2bs}, {"k", k}, {"tol", tol},
                  {"max_iter", max_iter}};

    const fs::path dir = common.run_dir();
    const std::string csv_path = (dir / "phase_diagram.csv").string();
    {
        csv::Writer w(csv_path);
        w.row("sigma2_w", "sigma2_b", "k", "phase", "q_star", "c_star");
        for (double s2b : s2bs) {
            for (double s2w : s2ws) {
                meanfield::MapParams p{s2w, s2b, k};
                const auto phase = meanfield::classify_phase(p);
                const auto fp = meanfield::solve_fixed_points(p, tol, max_iter);
                const double q = fp.q_unbounded ? std::numeric_limits<double>::infinity() : fp.q_star;
                const double c =
                    fp.c_defined ? fp.c_star : std::numeric_limits<double>::quiet_NaN();
                w.row(s2w, s2b, k, meanfield::phase_name(phase), q, c);
            }
        }
    }
    man.add_output(csv_path);

    const std::string summary_path = (dir / "summary.json").string();
    {
        nlohmann::json summary = {{"chaos_boundary_sigma2_w", 2.0},
                                  {"length_boundary_sigma2_w", meanfield::g_k(k)},
                                  {"k", k}};
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    man.add_output(summary_path);

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    std::cout << "phase-diagram: " << s2ws.size() * s2bs.size() << " grid points -> " << csv_path
              << "\n";
    return 0;
}

inline int run_propagate(detail::Common& common, std::string scheme_name, std::string s2w_range,
                         double s2b, double k, Eigen::Index width, Eigen::Index depth,
                         Eigen::Index inputs, int networks, double c0) {
    RunManifest man;
    man.command = "propagate";
    man.started = iso8601_now();
    man.threads = common.threads;

    std::vector<double> grid;
    mc::PropagationConfig cfg;
    if (auto j = common.load_config()) {
        cfg = detail::prop_config_from_json((*j)["propagation"]);
        for (double v : (*j)["grid"]) grid.push_back(v);
        if (j->contains("__seed")) cfg.seed = (*j)["__seed"].get<std::uint64_t>();
    } else {
        grid = parse_range(s2w_range);
        const InitScheme scheme = detail::scheme_from_flags(scheme_name, grid.front(), s2b, k);
        cfg = detail::prop_config(common, scheme, width, depth, inputs, networks, c0);
    }
    man.seed = cfg.seed;
    man.config = {{"propagation", detail::prop_config_json(cfg)}, {"grid", grid}};

    const fs::path dir = common.run_dir();
    const auto rep =
        mc::locate_empirical_boundary(cfg.scheme.family, grid, cfg, 0.02, 0.01, common.threads);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "curve_s2w_%.6g.csv", grid[i]);
        const std::string path = (dir / name).string();
        emit_curve_csv(rep.curves[i], path);
        man.add_output(path);
    }

    nlohmann::json points = nlohmann::json::array();
    for (const auto& pt : rep.points)
        points.push_back({{"sigma2_w", pt.sigma2_w},
                          {"growth", pt.growth},
                          {"final_c", pt.final_c},
                          {"truncated", pt.truncated},
                          {"chaotic", pt.chaotic}});
    nlohmann::json summary = {
        {"length_boundary", rep.length_boundary ? nlohmann::json(*rep.length_boundary)
                                                : nlohmann::json(nullptr)},
        {"chaos_boundary", rep.chaos_boundary ? nlohmann::json(*rep.chaos_boundary)
                                              : nlohmann::json(nullptr)},
        {"points", points}};
    const std::string summary_path = (dir / "summary.json").string();
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    man.add_output(summary_path);

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    std::cout << "propagate: " << grid.size() << " grid points, length boundary "
              << (rep.length_boundary ? csv::fmt(*rep.length_boundary) : std::string("none"))
              << ", chaos boundary "
              << (rep.chaos_boundary ? csv::fmt(*rep.chaos_boundary) : std::string("none")) << "\n";
    return 0;
}

inline int run_deadnodes(detail::Common& common, const std::string& scheme_name,
                         Eigen::Index width, Eigen::Index depth, Eigen::Index inputs,
                         int networks) {
    RunManifest man;
    man.command = "deadnodes";
    man.started = iso8601_now();
    man.threads = common.threads;

    std::vector<InitScheme> schemes;
    if (auto j = common.load_config()) {
        for (const auto& s : (*j)["schemes"]) schemes.push_back(s.get<InitScheme>());
        width = (*j)["width"].get<Eigen::Index>();
        depth = (*j)["depth"].get<Eigen::Index>();
        inputs = (*j)["n_inputs"].get<Eigen::Index>();
        networks = (*j)["n_networks"].get<int>();
        common.preset = (*j)["preset"].get<std::string>();
        if (j->contains("__seed")) common.seed = (*j)["__seed"].get<std::uint64_t>();
    } else if (scheme_name == "all") {
        schemes = {InitScheme::he(), InitScheme::aci(), InitScheme::rai(), InitScheme::raai()};
    } else {
        InitScheme s;
        s.family = family_from_name(scheme_name);
        switch (s.family) {
            case Family::He: s = InitScheme::he(); break;
            case Family::CorrelatedGaussian: s = InitScheme::aci(); break;
            case Family::RAI: s = InitScheme::rai(); break;
            case Family::RAAI: s = InitScheme::raai(); break;
        }
        schemes = {s};
    }
    man.seed = common.seed;
    man.config = {{"schemes", schemes}, {"width", width},         {"depth", depth},
                  {"n_inputs", inputs}, {"n_networks", networks}, {"preset", common.preset}};

    const fs::path dir = common.run_dir();
    const std::string report_path = (dir / "deadnodes.csv").string();
    csv::Writer w(report_path);
    w.row("scheme", "sigma2_w", "k", "dead_p", "dead_p_all_layers");
    std::cout << "scheme      sigma2_w   k      dead_p   (all-layer avg)\n";
    for (const auto& s : schemes) {
        mc::PropagationConfig cfg = detail::prop_config(common, s, width, depth, inputs, networks,
                                                        0.5);
        const auto rep = mc::dead_node_report(cfg, common.threads);
        w.row(family_name(s.family), s.sigma2_w, s.k, rep.probability, rep.all_layer_average);
        char line[128];
        std::snprintf(line, sizeof(line), "%-11s %-9g %-6g %.4f   (%.4f)\n",
                      family_name(s.family).c_str(), s.sigma2_w, s.k, rep.probability,
                      rep.all_layer_average);
        std::cout << line;
        char name[64];
        std::snprintf(name, sizeof(name), "dead_per_layer_%s.csv", family_name(s.family).c_str());
        const std::string layer_path = (dir / name).string();
        csv::Writer lw(layer_path);
        lw.row("layer", "dead_fraction");
        for (std::size_t l = 0; l < rep.per_layer.size(); ++l)
            lw.row(static_cast<int>(l + 1), rep.per_layer[l]);
    }
    man.add_output(report_path);
    for (const auto& s : schemes) {
        char name[64];
        std::snprintf(name, sizeof(name), "dead_per_layer_%s.csv", family_name(s.family).c_str());
        man.add_output((dir / name).string());
    }

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    return 0;
}

inline int run_critical_points(detail::Common& common, std::string approx, double k,
                               int hermite_order, int beta_order) {
    RunManifest man;
    man.command = "critical-points";
    man.started = iso8601_now();
    man.threads = common.threads;
    man.seed = common.seed;
    if (auto j = common.load_config()) {
        approx = (*j)["approx"].get<std::string>();
        k = (*j)["k"];
        hermite_order = (*j)["hermite_order"];
        beta_order = (*j)["beta_order"];
    }
    man.config = {{"approx", approx}, {"k", k}, {"hermite_order", hermite_order},
                  {"beta_order", beta_order}};

    const quad::QuadratureGrid grid(hermite_order, beta_order);
    auto rows = quad::critical_points_table(grid, k);
    if (approx != "both") {
        std::erase_if(rows, [&](const auto& r) { return r.approximation != approx; });
    }

    const fs::path dir = common.run_dir();
    const std::string csv_path = (dir / "critical_points.csv").string();
    {
        csv::Writer w(csv_path);
        w.row("approximation", "scheme", "quantity", "critical_sigma2_w");
        for (const auto& r : rows)
            w.row(r.approximation, r.scheme, r.quantity, r.critical_sigma2_w);
    }
    man.add_output(csv_path);

    std::cout << "approximation  scheme  quantity     critical sigma2_w\n";
    for (const auto& r : rows) {
        char line[96];
        std::snprintf(line, sizeof(line), "%-14s %-7s %-12s %.4f\n", r.approximation.c_str(),
                      r.scheme.c_str(), r.quantity.c_str(), r.critical_sigma2_w);
        std::cout << line;
    }

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    return 0;
}

inline int run_train(detail::Common& common, const std::string& teacher,
                     const std::string& scheme_name, double s2w, double s2b, double k,
                     const std::string& optimizer, Eigen::Index epochs) {
    RunManifest man;
    man.command = "train";
    man.started = iso8601_now();
    man.threads = common.threads;

    nn::TrainConfig cfg;
    if (auto j = common.load_config()) {
        nlohmann::json cj = *j;
        if (cj.contains("__seed")) cj.erase("__seed");
        cfg = cj.get<nn::TrainConfig>();
    } else {
        cfg.teacher = nn::teacher_from_name(teacher);
        cfg.student_init = detail::scheme_from_flags(scheme_name, s2w, s2b, k);
        cfg.optimizer = nn::optimizer_from_name(optimizer);
        cfg.epochs = epochs;
        cfg.seed = common.seed;
        if (common.preset == "paper")
            cfg = nn::TrainConfig::paper(cfg.teacher, cfg.student_init, cfg.optimizer, cfg.seed);
    }
    man.seed = cfg.seed;
    man.config = cfg;

    const auto run = nn::run_experiment(cfg);

    const fs::path dir = common.run_dir();
    const std::string json_path = (dir / "run.json").string();
    {
        std::ofstream out(json_path, std::ios::binary);
        out << nn::run_to_json(run).dump(2) << '\n';
    }
    man.add_output(json_path);
    const std::string csv_path = (dir / "curve.csv").string();
    emit_curve_csv(run, csv_path);
    man.add_output(csv_path);

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    std::cout << "train: " << (run.diverged ? "DIVERGED" : "ok") << ", final val loss "
              << csv::fmt(run.final_val_loss()) << " after " << run.epochs_completed
              << " epochs\n";
    return 0;
}

inline int run_compare(detail::Common& common) {
    RunManifest man;
    man.command = "compare";
    man.started = iso8601_now();
    man.threads = common.threads;

    auto j = common.load_config();
    if (!j) {
        std::cerr << "compare requires --config with {schemes, base, n_seeds}\n";
        return 2;
    }
    std::vector<InitScheme> schemes;
    for (const auto& s : (*j)["schemes"]) schemes.push_back(s.get<InitScheme>());
    nn::TrainConfig base = (*j)["base"].get<nn::TrainConfig>();
    const int n_seeds = (*j)["n_seeds"].get<int>();
    man.seed = base.seed;
    man.config = {{"schemes", schemes}, {"base", base}, {"n_seeds", n_seeds}};

    const auto cmp = nn::compare_schemes(schemes, base, n_seeds, common.threads);

    const fs::path dir = common.run_dir();
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& e : cmp.entries) {
        char name[80];
        std::snprintf(name, sizeof(name), "mean_curve_%s_k%.6g_s2w%.6g.csv",
                      family_name(e.scheme.family).c_str(), e.scheme.k, e.scheme.sigma2_w);
        const std::string path = (dir / name).string();
        csv::Writer w(path);
        w.row("epoch", "mean_val_loss", "std_val_loss");
        for (std::size_t ep = 0; ep < e.mean_val.size(); ++ep)
            w.row(static_cast<int>(ep + 1), e.mean_val[ep], e.std_val[ep]);
        man.add_output(path);
        summary.push_back({{"scheme", e.scheme},
                           {"mean_final_val", e.mean_final_val()},
                           {"n_diverged", e.diverged_seeds.size()}});
        char line[160];
        std::snprintf(line, sizeof(line), "%-20s k=%-7g s2w=%-6g final %-12.6g diverged %zu/%d\n",
                      family_name(e.scheme.family).c_str(), e.scheme.k, e.scheme.sigma2_w,
                      e.mean_final_val(), e.diverged_seeds.size(), n_seeds);
        std::cout << line;
    }
    const std::string summary_path = (dir / "summary.json").string();
    {
        std::ofstream out(summary_path, std::ios::binary);
        out << summary.dump(2) << '\n';
    }
    man.add_output(summary_path);

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    return 0;
}

inline int run_validate_init(detail::Common& common, const std::string& scheme_name, double s2w,
                             double s2b, double k, Eigen::Index n_in, Eigen::Index n_samples,
                             std::string dump_layer) {
    RunManifest man;
    man.command = "validate-init";
    man.started = iso8601_now();
    man.threads = common.threads;
    man.seed = common.seed;

    InitScheme scheme = detail::scheme_from_flags(scheme_name, s2w, s2b, k);
    if (auto j = common.load_config()) {
        scheme = (*j)["scheme"].get<InitScheme>();
        n_in = (*j)["n_in"].get<Eigen::Index>();
        n_samples = (*j)["n_samples"].get<Eigen::Index>();
        dump_layer = (*j)["dump_layer"].get<std::string>();
        if (j->contains("__seed")) man.seed = (*j)["__seed"].get<std::uint64_t>();
    }
    man.config = {{"scheme", scheme},
                  {"n_in", n_in},
                  {"n_samples", n_samples},
                  {"dump_layer", dump_layer}};

    auto rs = RandomStream::from(man.seed, 0x76616c6964ull /*"valid"*/);
    const Eigen::MatrixXd emp = empirical_row_covariance(scheme, n_in, n_samples, rs);
    const Eigen::MatrixXd ana = analytic_row_covariance(scheme, n_in);

    // entrywise z-scores against the exact sampling error of a Gaussian
    // second-moment estimate: Var(C_ij) = (A_ii A_jj + A_ij^2)/n
    double max_abs_z = 0.0;
    for (Eigen::Index i = 0; i < n_in; ++i)
        for (Eigen::Index jj = 0; jj <= i; ++jj) {
            const double se = std::sqrt(
                (ana(i, i) * ana(jj, jj) + ana(i, jj) * ana(i, jj)) / static_cast<double>(n_samples));
            max_abs_z = std::max(max_abs_z, std::abs(emp(i, jj) - ana(i, jj)) / se);
        }

    // beta statistics on a sampled layer
    auto rs2 = RandomStream::from(man.seed, 0x6265746173ull /*"betas"*/);
    const Eigen::Index n_out = 512;
    const LayerWeights lw = sample_layer(scheme, n_in, n_out, rs2);
    double beta_mean = 0.0;
    for (std::size_t i = 0; i < lw.beta_index.size(); ++i) {
        const Eigen::Index idx = lw.beta_index[i];
        beta_mean += idx == n_in ? lw.bias[static_cast<Eigen::Index>(i)]
                                 : lw.weights(static_cast<Eigen::Index>(i), idx);
    }
    if (!lw.beta_index.empty()) beta_mean /= static_cast<double>(lw.beta_index.size());

    nlohmann::json report = {{"scheme", scheme},
                             {"n_in", n_in},
                             {"n_samples", n_samples},
                             {"max_abs_z", max_abs_z},
                             {"covariance_ok", max_abs_z < 5.0},
                             {"beta_substitutions", lw.beta_index.size()},
                             {"beta_sample_mean", beta_mean},
                             {"n_out", n_out}};

    const fs::path dir = common.run_dir();
    const std::string report_path = (dir / "validate_init.json").string();
    {
        std::ofstream out(report_path, std::ios::binary);
        out << report.dump(2) << '\n';
    }
    man.add_output(report_path);

    if (!dump_layer.empty()) {
        // row-major dump: one CSV row per node, weights then bias
        const std::string dump_path = (dir / dump_layer).string();
        csv::Writer w(dump_path);
        std::string header = "node";
        for (Eigen::Index jj = 0; jj < n_in; ++jj) header += ",w" + std::to_string(jj);
        header += ",bias";
        w.raw_line(header);
        for (Eigen::Index i = 0; i < n_out; ++i) {
            std::string line = std::to_string(i);
            for (Eigen::Index jj = 0; jj < n_in; ++jj) line += "," + csv::fmt(lw.weights(i, jj));
            line += "," + csv::fmt(lw.bias[i]);
            w.raw_line(line);
        }
        man.add_output(dump_path);
    }

    man.finished = iso8601_now();
    man.write((dir / "manifest.json").string());
    std::cout << "validate-init: max |z| = " << csv::fmt(max_abs_z) << " ("
              << (max_abs_z < 5.0 ? "ok" : "FAIL") << ")\n";
    return 0;
}

/// Parses argv (without the program name) and executes one subcommand.
/// Returns the process exit status; errors print machine-readable JSON to
/// stderr.
inline int dispatch(std::vector<std::string> args) {
    CLI::App app{"signal propagation and initialization experiments for deep relu networks"};
    app.require_subcommand(1);

    detail::Common common;

    // phase-diagram
    auto* pd = app.add_subcommand("phase-diagram",
                                  "analytic phase classification over a parameter grid");
    std::string pd_s2w = "0.5:3.5:0.1", pd_s2b = "0.1";
    double pd_k = 0.0, pd_tol = 1e-10;
    int pd_maxit = 100000;
    pd->add_option("--sigma2w", pd_s2w, "weight variance range start:stop:step");
    pd->add_option("--sigma2b", pd_s2b, "bias variance (value or range)");
    pd->add_option("--k", pd_k, "correlation strength");
    pd->add_option("--tol", pd_tol, "fixed-point tolerance");
    pd->add_option("--max-iter", pd_maxit, "fixed-point iteration cap");

    // propagate
    auto* pr = app.add_subcommand("propagate", "Monte Carlo layer curves over a sigma2_w grid");
    std::string pr_scheme = "he", pr_s2w = "2.0";
    double pr_s2b = 0.0, pr_k = 0.0, pr_c0 = 0.5;
    Eigen::Index pr_width = 0, pr_depth = 0, pr_inputs = 0;
    int pr_networks = 0;
    pr->add_option("--scheme", pr_scheme, "he|aci|rai|raai|corr");
    pr->add_option("--sigma2w", pr_s2w, "weight variance (value or range)");
    pr->add_option("--sigma2b", pr_s2b, "bias variance");
    pr->add_option("--k", pr_k, "correlation strength");
    pr->add_option("--width", pr_width, "layer width N");
    pr->add_option("--depth", pr_depth, "layers L");
    pr->add_option("--inputs", pr_inputs, "input signals M (paired)");
    pr->add_option("--networks", pr_networks, "ensemble size");
    pr->add_option("--c0", pr_c0, "input pair correlation");

    // deadnodes
    auto* dn = app.add_subcommand("deadnodes", "dead-node probabilities per scheme");
    std::string dn_scheme = "all";
    Eigen::Index dn_width = 0, dn_depth = 0, dn_inputs = 0;
    int dn_networks = 0;
    dn->add_option("--scheme", dn_scheme, "he|aci|rai|raai|all");
    dn->add_option("--width", dn_width, "layer width N");
    dn->add_option("--depth", dn_depth, "layers L");
    dn->add_option("--inputs", dn_inputs, "input signals M");
    dn->add_option("--networks", dn_networks, "ensemble size");

    // critical-points
    auto* cp = app.add_subcommand("critical-points",
                                  "critical variances from the stability integrals");
    std::string cp_approx = "both";
    double cp_k = 100.0;
    int cp_h = 64, cp_b = 64;
    cp->add_option("--approx", cp_approx, "rms|mean|both")
        ->check(CLI::IsMember({"rms", "mean", "both"}));
    cp->add_option("--k", cp_k, "correlation strength for the anti-correlated scheme");
    cp->add_option("--hermite-order", cp_h, "Gauss-Hermite order");
    cp->add_option("--beta-order", cp_b, "beta-factor Gauss-Legendre order");

    // train
    auto* tr = app.add_subcommand("train", "one teacher-student training run");
    std::string tr_teacher = "standard", tr_scheme = "he", tr_opt = "adam";
    double tr_s2w = 2.0, tr_s2b = 0.0, tr_k = 0.0;
    Eigen::Index tr_epochs = 200;
    tr->add_option("--teacher", tr_teacher, "standard|simple|complex");
    tr->add_option("--scheme", tr_scheme, "student init: he|aci|rai|raai|corr");
    tr->add_option("--sigma2w", tr_s2w, "student weight variance");
    tr->add_option("--sigma2b", tr_s2b, "student bias variance");
    tr->add_option("--k", tr_k, "student correlation strength");
    tr->add_option("--optimizer", tr_opt, "sgd|adam");
    tr->add_option("--epochs", tr_epochs, "training epochs");

    // compare
    auto* cm = app.add_subcommand("compare", "multi-scheme training comparison (config-driven)");

    // validate-init
    auto* vi = app.add_subcommand("validate-init", "sampler statistics against the analytic row covariance");
    std::string vi_scheme = "aci", vi_dump;
    double vi_s2w = 2.0, vi_s2b = 0.0, vi_k = 100.0;
    Eigen::Index vi_nin = 64, vi_samples = 100000;
    vi->add_option("--scheme", vi_scheme, "he|aci|rai|raai|corr");
    vi->add_option("--sigma2w", vi_s2w, "weight variance");
    vi->add_option("--sigma2b", vi_s2b, "bias variance");
    vi->add_option("--k", vi_k, "correlation strength");
    vi->add_option("--n-in", vi_nin, "row dimension");
    vi->add_option("--samples", vi_samples, "sampled rows");
    vi->add_option("--dump-layer", vi_dump, "also dump one sampled layer to this CSV");

    for (auto* cmd : {pd, pr, dn, cp, tr, cm, vi}) common.attach(cmd);

    std::reverse(args.begin(), args.end());  // CLI11's vector parse expects reversed args
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            return app.exit(e);
        }
        nlohmann::json err = {{"error", "argument_parse"}, {"detail", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    }

    if (common.out.empty())
        common.out = default_out_root() + "/" + app.get_subcommands().front()->get_name();

    try {
        if (pd->parsed()) return run_phase_diagram(common, pd_s2w, pd_s2b, pd_k, pd_tol, pd_maxit);
        if (pr->parsed())
            return run_propagate(common, pr_scheme, pr_s2w, pr_s2b, pr_k, pr_width, pr_depth,
                                 pr_inputs, pr_networks, pr_c0);
        if (dn->parsed())
            return run_deadnodes(common, dn_scheme, dn_width, dn_depth, dn_inputs, dn_networks);
        if (cp->parsed()) return run_critical_points(common, cp_approx, cp_k, cp_h, cp_b);
        if (tr->parsed())
            return run_train(common, tr_teacher, tr_scheme, tr_s2w, tr_s2b, tr_k, tr_opt,
                             tr_epochs);
        if (cm->parsed()) return run_compare(common);
        if (vi->parsed())
            return run_validate_init(common, vi_scheme, vi_s2w, vi_s2b, vi_k, vi_nin, vi_samples,
                                     vi_dump);
    } catch (const std::exception& e) {
        nlohmann::json err = {{"error", "run_failed"}, {"detail", e.what()}};
        std::cerr << err.dump() << "\n";
        return 1;
    }
    std::cerr << nlohmann::json{{"error", "unknown_subcommand"}}.dump() << "\n";
    return 2;
}

}  // namespace corrprop::cli
