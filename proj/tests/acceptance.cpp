// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Every tolerance is pinned in code next to the check it gates.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "corrprop/cli.hpp"
#include "corrprop/init.hpp"
#include "corrprop/meanfield.hpp"
#include "corrprop/mlp.hpp"
#include "corrprop/propagate.hpp"
#include "corrprop/quadrature.hpp"
#include "corrprop/train.hpp"

using namespace corrprop;
namespace fs = std::filesystem;

namespace {

constexpr int kThreads = 2;

struct Gate {
    int failures = 0;
    std::vector<std::string> lines;

    void criterion(int id, bool ok, const std::string& detail) {
        char buf[512];
        std::snprintf(buf, sizeof(buf), "[%s] criterion %d: %s", ok ? "PASS" : "FAIL", id,
                      detail.c_str());
        lines.push_back(buf);
        std::printf("%s\n", buf);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double plateau(const mc::LayerStatsCurve& c, Eigen::Index tail = 5) {
    double s = 0.0;
    for (Eigen::Index l = c.layers - tail; l < c.layers; ++l) s += c.mean_q[l];
    return s / static_cast<double>(tail);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double timer_s(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- criterion 1
void c1_analytic_boundaries(Gate& gate) {
    using namespace corrprop::meanfield;
    const bool g0 = g_k(0.0) == 2.0;
    const bool g100 = std::abs(g_k(100.0) - 2.92) <= 0.005;
    const bool chi_exact = chi1({2.0, 0.0, 0.0}) == 1.0 && chi1({2.0, 0.3, 100.0}) == 1.0;
    char d[256];
    std::snprintf(d, sizeof(d),
                  "analytic boundaries: g_k(0)=%g (exact 2), g_k(100)=%.4f (2.92 +- 0.005), "
                  "chi1(s2w=2)=1 exactly: %s",
                  g_k(0.0), g_k(100.0), chi_exact ? "yes" : "no");
    gate.criterion(1, g0 && g100 && chi_exact, d);
}

// ---------------------------------------------------------------- criterion 2
void c2_critical_variances(Gate& gate) {
    using namespace corrprop::quad;
    const QuadratureGrid grid(64, 64);
    const double k = 100.0;
    auto root = [&](auto f, double lo, double hi) {
        return find_critical_variance(f, lo, hi, 1e-10);
    };
    const double rai_q_rms = root([&](double x) { return zeta_rai(x, grid); }, 0.1, 1.5);
    const double raai_c_rms = root([&](double x) { return chi1_raai(x, k, grid); }, 0.5, 2.5);
    const double raai_q_rms = root([&](double x) { return zeta_raai(x, k, grid); }, 0.5, 3.5);
    const double rai_q_m =
        root([&](double x) { return zeta_rai(x, grid, Approximation::Mean); }, 0.1, 1.5);
    const double raai_c_m =
        root([&](double x) { return chi1_raai(x, k, grid, Approximation::Mean); }, 0.5, 2.5);
    const double raai_q_m =
        root([&](double x) { return zeta_raai(x, k, grid, Approximation::Mean); }, 0.5, 3.5);

    const bool ok = rai_q_rms >= 0.55 && rai_q_rms <= 0.58 &&
                    std::abs(raai_c_rms - 1.41) <= 0.02 && std::abs(raai_q_rms - 1.75) <= 0.02 &&
                    std::abs(rai_q_m - 0.85) <= 0.05 && std::abs(raai_c_m - 1.46) <= 0.05 &&
                    std::abs(raai_q_m - 1.89) <= 0.05;
    char d[320];
    std::snprintf(d, sizeof(d),
                  "critical variances: rms (%.4f in [0.55,0.58], %.4f ~ 1.41+-0.02, %.4f ~ "
                  "1.75+-0.02), mean (%.4f ~ 0.85+-0.05, %.4f ~ 1.46+-0.05, %.4f ~ 1.89+-0.05)",
                  rai_q_rms, raai_c_rms, raai_q_rms, rai_q_m, raai_c_m, raai_q_m);
    gate.criterion(2, ok, d);
}

// ---------------------------------------------------------------- criterion 3
void c3_dead_nodes(Gate& gate) {
    auto run = [&](InitScheme s) {
        mc::PropagationConfig cfg = mc::PropagationConfig::desk(s, 1003);
        return mc::dead_node_probability(cfg, kThreads);  // N=256 L=30 M=128 nets=8
    };
    const double he = run(InitScheme::he());
    const double aci = run(InitScheme::aci());
    const double rai = run(InitScheme::rai());
    const double raai = run(InitScheme::raai());
    const bool ok = std::abs(he - 0.50) <= 0.02 && std::abs(aci - 0.50) <= 0.02 &&
                    std::abs(rai - 0.36) <= 0.02 && std::abs(raai - 0.36) <= 0.02;
    char d[256];
    std::snprintf(d, sizeof(d),
                  "dead-node probabilities (desk): He %.3f (0.50), ACI %.3f (0.50), RAI %.3f "
                  "(0.36), RAAI %.3f (0.36), all +- 0.02",
                  he, aci, rai, raai);
    gate.criterion(3, ok, d);
}

// ---------------------------------------------------------------- criterion 4
void c4_lengths_vs_theory(Gate& gate) {
    using meanfield::solve_fixed_points;
    bool ok = true;
    std::string detail = "length plateau vs analytic fixed point:";
    for (auto [s2w, s2b, k] : {std::tuple{1.0, 0.1, 0.0}, std::tuple{2.5, 0.1, 100.0}}) {
        const auto fp = solve_fixed_points({s2w, s2b, k});
        // the k=100 map contracts at 0.856/layer, so give it extra depth;
        // the plateau estimate averages the converged tail and enough
        // networks that the heavy-tailed network-level spread averages out
        const Eigen::Index depth = k > 0 ? 60 : 40;
        const Eigen::Index tail = k > 0 ? 20 : 25;
        for (auto [width, nets, inputs, tol] :
             {std::tuple<Eigen::Index, int, Eigen::Index, double>{256, 32, 128, 0.10},
              std::tuple<Eigen::Index, int, Eigen::Index, double>{2048, 24, 32, 0.03}}) {
            mc::PropagationConfig cfg;
            cfg.scheme = InitScheme::aci(s2w, s2b, k);
            cfg.width = width;
            cfg.depth = depth;
            cfg.n_inputs = inputs;
            cfg.n_networks = nets;
            cfg.seed = 1004;
            const auto curve = mc::measure_curves(cfg, kThreads);
            const double rel = std::abs(plateau(curve, tail) / fp.q_star - 1.0);
            ok = ok && rel <= tol;
            char piece[128];
            std::snprintf(piece, sizeof(piece), " [s2w=%g k=%g N=%d: %.2f%% of q*=%.4g, tol %.0f%%]",
                          s2w, k, static_cast<int>(width), 100 * rel, fp.q_star, 100 * tol);
            detail += piece;
        }
    }
    gate.criterion(4, ok, detail);
}

// ---------------------------------------------------------------- criterion 5
void c5_phase_structure(Gate& gate) {
    bool ok_a = true;
    std::string det_a;
    for (double s2w : {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}) {
        mc::PropagationConfig cfg;
        cfg.scheme = InitScheme::aci(s2w, 0.1, 0.0);
        cfg.width = 256;
        cfg.depth = 80;  // the k=0 approach to c*=1 is algebraic in depth
        cfg.n_inputs = 128;
        cfg.n_networks = 8;
        cfg.seed = 1005;
        const auto curve = mc::measure_curves(cfg, kThreads);
        const double final_c = curve.final_mean_c();
        ok_a = ok_a && std::abs(final_c - 1.0) <= 0.02;
        char piece[48];
        std::snprintf(piece, sizeof(piece), " %.3f", final_c);
        det_a += piece;
    }
    gate.criterion(5, ok_a, "(a) k=0 sweep final correlations ->" + det_a + " (1 +- 0.02)");

    mc::PropagationConfig cfg_b;
    cfg_b.scheme = InitScheme::aci(2.5, 0.1, 100.0);
    cfg_b.width = 256;
    cfg_b.depth = 30;
    cfg_b.n_inputs = 128;
    cfg_b.n_networks = 8;
    cfg_b.seed = 1006;
    const auto curve_b = mc::measure_curves(cfg_b, kThreads);
    bool ok_b = !curve_b.truncated;
    for (Eigen::Index l = curve_b.layers - 5; l < curve_b.layers; ++l)
        ok_b = ok_b && curve_b.mean_c[l] < 0.95;
    char d_b[160];
    std::snprintf(d_b, sizeof(d_b),
                  "(b) k=100 s2w=2.5 chaotic correlation: final c = %.3f, last 5 layers all < 0.95",
                  curve_b.final_mean_c());
    gate.criterion(5, ok_b, d_b);

    auto sweep = [&](Family fam, double lo, double hi, std::uint64_t seed) {
        std::vector<double> grid;
        for (double v = lo; v < hi - 1e-9; v += 0.05) grid.push_back(v);
        mc::PropagationConfig cfg;
        cfg.scheme = fam == Family::RAI ? InitScheme::rai() : InitScheme::raai();
        cfg.width = 256;
        cfg.depth = 80;  // long enough that slow ordered transients settle
        cfg.n_inputs = 128;
        cfg.n_networks = 8;
        cfg.seed = seed;
        return mc::locate_empirical_boundary(fam, grid, cfg, 0.02, 0.01, kThreads);
    };
    const auto rai = sweep(Family::RAI, 0.3, 1.0, 1007);
    const auto raai = sweep(Family::RAAI, 0.5, 1.5, 1008);
    const bool ok_c = rai.length_boundary && std::abs(*rai.length_boundary - 0.72) <= 0.1 &&
                      !rai.chaos_boundary && raai.chaos_boundary &&
                      std::abs(*raai.chaos_boundary - 0.9) <= 0.1 && raai.length_boundary &&
                      std::abs(*raai.length_boundary - 1.2) <= 0.15;
    char d_c[256];
    std::snprintf(d_c, sizeof(d_c),
                  "(c) empirical boundaries: RAI length %s (0.72 +- 0.1) chaos %s (none), RAAI "
                  "chaos %s (0.9 +- 0.1) length %s (1.2 +- 0.15)",
                  rai.length_boundary ? csv::fmt(*rai.length_boundary).c_str() : "none",
                  rai.chaos_boundary ? csv::fmt(*rai.chaos_boundary).c_str() : "none",
                  raai.chaos_boundary ? csv::fmt(*raai.chaos_boundary).c_str() : "none",
                  raai.length_boundary ? csv::fmt(*raai.length_boundary).c_str() : "none");
    gate.criterion(5, ok_c, d_c);
}

// ---------------------------------------------------------------- criterion 6
void c6_gradient_oracle(Gate& gate) {
    using namespace corrprop::nn;
    bool ok = true;
    double worst = 0.0;
    for (auto act : {Activation::ReLU, Activation::Tanh}) {
        auto mk = RandomStream::from(1009, static_cast<int>(act));
        Mlp net = make_mlp(InitScheme::he(2.0, 0.1), 8, 8, 3, 1, act, mk);
        auto rs = RandomStream::from(1010, static_cast<int>(act));
        Eigen::MatrixXd x(8, 8), y(8, 1);
        for (Eigen::Index i = 0; i < 8; ++i) {
            for (Eigen::Index j = 0; j < 8; ++j) x(i, j) = rs.normal();
            y(i, 0) = rs.normal();
        }
        const auto g = backward(net, forward(net, x), y);
        const double h = 1e-6;
        for (int t = 0; t < 100; ++t) {
            const auto li = static_cast<std::size_t>(rs.uniform_index(net.layers.size()));
            const bool bias = rs.uniform01() < 0.2;
            double* param;
            double analytic;
            if (bias) {
                auto& b = net.layers[li].bias;
                const auto r = static_cast<Eigen::Index>(rs.uniform_index(b.size()));
                param = &b(r);
                analytic = g.bias[li](r);
            } else {
                auto& W = net.layers[li].weights;
                const auto r = static_cast<Eigen::Index>(rs.uniform_index(W.rows()));
                const auto c = static_cast<Eigen::Index>(rs.uniform_index(W.cols()));
                param = &W(r, c);
                analytic = g.weights[li](r, c);
            }
            const double keep = *param;
            *param = keep + h;
            const double up = mse(predict(net, x), y);
            *param = keep - h;
            const double dn = mse(predict(net, x), y);
            *param = keep;
            const double fd = (up - dn) / (2 * h);
            const double rel =
                std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-6});
            worst = std::max(worst, rel);
            ok = ok && rel <= 1e-5;
        }
    }
    char d[160];
    std::snprintf(d, sizeof(d),
                  "gradients vs central differences (relu+tanh, 100 perturbations each): worst "
                  "relative error %.2e (<= 1e-5)",
                  worst);
    gate.criterion(6, ok, d);
}

// ---------------------------------------------------------------- criterion 7
void c7_training_ordering(Gate& gate) {
    using namespace corrprop::nn;
    TrainConfig base;
    base.teacher = TeacherKind::Standard;
    base.input_dim = 64;
    base.width = 64;
    base.hidden_layers = 10;
    base.n_train = 10000;
    base.n_val = 1000;
    base.batch_size = 1000;
    base.epochs = 200;
    base.seed = 1011;
    const int seeds = 5;

    auto finals = [](const SchemeComparison::Entry& e) {
        std::vector<double> v;
        for (const auto& r : e.runs) v.push_back(r.final_val_loss());  // inf when diverged
        return v;
    };
    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };

    base.optimizer = Optimizer::Adam;
    const auto adam = compare_schemes({InitScheme::raai(), InitScheme::he()}, base, seeds, kThreads);
    const auto raai_f = finals(adam.entries[0]);
    const auto he_f = finals(adam.entries[1]);
    const double m_raai = mean_of(raai_f), m_he = mean_of(he_f);
    const double p_adam = rank_sum_pvalue_less(raai_f, he_f);
    // ordering on the means; an exact tie falls back to the one-sided rank
    // test at the 0.1 level
    const bool ok_adam = m_raai < m_he || (m_raai == m_he && p_adam < 0.1);

    base.optimizer = Optimizer::SGD;
    const auto sgd =
        compare_schemes({InitScheme::aci(2.0, 0.0, -0.5), InitScheme::he()}, base, seeds, kThreads);
    const auto pos_f = finals(sgd.entries[0]);
    const auto he_s = finals(sgd.entries[1]);
    const double m_pos = mean_of(pos_f), m_he_s = mean_of(he_s);
    const double p_sgd = rank_sum_pvalue_less(he_s, pos_f);
    const bool ok_sgd = m_pos >= m_he_s || (m_pos == m_he_s && p_sgd < 0.1);

    char d[360];
    std::snprintf(d, sizeof(d),
                  "training ordering (standard teacher, 5 seeds, 200 epochs): adam RAAI %.4g <= "
                  "He %.4g (rank p=%.3f); sgd k=-0.5 %.4g >= He %.4g (diverged runs count as "
                  "worse; rank p=%.3f)",
                  m_raai, m_he, p_adam, m_pos, m_he_s, p_sgd);
    gate.criterion(7, ok_adam && ok_sgd, d);
}

// ---------------------------------------------------------------- criterion 8
void c8_sampler_statistics(Gate& gate) {
    bool cov_ok = true;
    double worst_z = 0.0;
    int tag = 0;
    for (double k : {-0.5, 0.0, 100.0}) {
        auto rs = RandomStream::from(1012, tag++);
        const Eigen::Index n_in = 64, n = 100000;
        const InitScheme s = InitScheme::aci(2.0, 0.0, k);
        const Eigen::MatrixXd emp = empirical_row_covariance(s, n_in, n, rs);
        const Eigen::MatrixXd ana = analytic_row_covariance(s, n_in);
        for (Eigen::Index i = 0; i < n_in; ++i)
            for (Eigen::Index j = 0; j <= i; ++j) {
                const double se =
                    std::sqrt((ana(i, i) * ana(j, j) + ana(i, j) * ana(i, j)) / double(n));
                worst_z = std::max(worst_z, std::abs(emp(i, j) - ana(i, j)) / se);
            }
        cov_ok = cov_ok && worst_z < 5.0;
    }
    auto rs = RandomStream::from(1013);
    double mean = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) mean += rs.beta21();
    mean /= n;
    const bool beta_ok = std::abs(mean - 2.0 / 3.0) <= 0.002;
    char d[200];
    std::snprintf(d, sizeof(d),
                  "sampler statistics: row covariance worst |z| = %.2f (< 5 se, k in {-0.5, 0, "
                  "100}); beta(2,1) mean %.5f = 2/3 +- 0.002",
                  worst_z, mean);
    gate.criterion(8, cov_ok && beta_ok, d);
}

// ---------------------------------------------------------------- criterion 9
void c9_manifest_rerun(Gate& gate) {
    const fs::path root = fs::temp_directory_path() / "corrprop_acceptance";
    fs::remove_all(root);
    fs::create_directories(root);
    bool ok = true;
    std::string detail = "manifest rerun reproduces bytes:";

    // compare is config-driven; stage its config file
    const fs::path cmp_cfg = root / "cmp.json";
    {
        nn::TrainConfig base;
        base.input_dim = 8;
        base.width = 8;
        base.hidden_layers = 2;
        base.n_train = 100;
        base.n_val = 20;
        base.batch_size = 50;
        base.epochs = 2;
        base.seed = 3;
        nlohmann::json j = {{"schemes", std::vector<InitScheme>{InitScheme::he(), InitScheme::raai()}},
                            {"base", base},
                            {"n_seeds", 2}};
        std::ofstream out(cmp_cfg);
        out << j.dump(2);
    }

    const std::vector<std::pair<std::string, std::vector<std::string>>> cases = {
        {"propagate",
         {"propagate", "--scheme", "aci", "--sigma2w", "1.5:2.7:0.5", "--sigma2b", "0.1", "--k",
          "100", "--width", "48", "--depth", "16", "--inputs", "16", "--networks", "2", "--seed",
          "99"}},
        {"critical-points", {"critical-points", "--approx", "both"}},
        {"phase-diagram",
         {"phase-diagram", "--k", "100", "--sigma2w", "1.5:3.5:0.25", "--sigma2b", "0.1"}},
        {"deadnodes",
         {"deadnodes", "--scheme", "all", "--width", "64", "--depth", "8", "--inputs", "32",
          "--networks", "2", "--seed", "4"}},
        {"validate-init",
         {"validate-init", "--scheme", "raai", "--n-in", "16", "--samples", "5000", "--seed",
          "5", "--dump-layer", "layer.csv"}},
        {"train",
         {"train", "--teacher", "simple", "--scheme", "rai", "--sigma2w", "0.36", "--optimizer",
          "adam", "--epochs", "3", "--seed", "12"}},
        {"compare", {"compare", "--config", cmp_cfg.string()}},
    };
    for (const auto& [name, argv] : cases) {
        const fs::path a = root / (name + "_a");
        const fs::path b = root / (name + "_b");
        auto args_a = argv;
        args_a.push_back("--out");
        args_a.push_back(a.string());
        int rc = cli::dispatch(args_a);
        std::vector<std::string> args_b = {argv[0], "--config", (a / "manifest.json").string(),
                                           "--out", b.string()};
        rc += cli::dispatch(args_b);
        bool same = rc == 0;
        const auto man = load_json((a / "manifest.json").string());
        for (const auto& o : man.at("outputs")) {
            const fs::path pa = o.at("path").get<std::string>();
            same = same && slurp(pa) == slurp(b / pa.filename());
        }
        detail += " " + name + (same ? " ok" : " MISMATCH");
        ok = ok && same;
    }
    gate.criterion(9, ok, detail);
}

}  // namespace

int main() {
    Gate gate;
    const auto t0 = std::chrono::steady_clock::now();
    c1_analytic_boundaries(gate);
    c2_critical_variances(gate);
    c3_dead_nodes(gate);
    c4_lengths_vs_theory(gate);
    c5_phase_structure(gate);
    c6_gradient_oracle(gate);
    c8_sampler_statistics(gate);
    c9_manifest_rerun(gate);
    c7_training_ordering(gate);  // the long one last
    std::printf("----\n%s: %d checks, %d failed, %.1f s\n",
                gate.failures == 0 ? "ACCEPTED" : "REJECTED",
                static_cast<int>(gate.lines.size()), gate.failures, timer_s(t0));
    return gate.failures == 0 ? 0 : 1;
}
