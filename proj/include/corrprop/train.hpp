#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "corrprop/manifest.hpp"
#include "corrprop/mlp.hpp"
#include "corrprop/parallel.hpp"

// Teacher-student experiments: a student network is trained with MSE on
// examples labeled by a fixed, untrained teacher network.

namespace corrprop::nn {

enum class TeacherKind {
    Standard,  // relu, same size as the student, He init
    Simple,    // relu, one hidden layer of 10 nodes, He init
    Complex,   // tanh, same size as the student, chaotic init (1.5, 0)
};

inline std::string teacher_name(TeacherKind t) {
    switch (t) {
        case TeacherKind::Standard: return "standard";
        case TeacherKind::Simple: return "simple";
        case TeacherKind::Complex: return "complex";
    }
    throw std::logic_error("bad teacher");
}

inline TeacherKind teacher_from_name(const std::string& s) {
    if (s == "standard") return TeacherKind::Standard;
    if (s == "simple") return TeacherKind::Simple;
    if (s == "complex") return TeacherKind::Complex;
    throw std::invalid_argument("unknown teacher task: " + s);
}

enum class Optimizer { SGD, Adam };

inline std::string optimizer_name(Optimizer o) { return o == Optimizer::SGD ? "sgd" : "adam"; }
inline Optimizer optimizer_from_name(const std::string& s) {
    if (s == "sgd") return Optimizer::SGD;
    if (s == "adam") return Optimizer::Adam;
    throw std::invalid_argument("unknown optimizer: " + s);
}

struct TrainConfig {
    TeacherKind teacher = TeacherKind::Standard;
    InitScheme student_init = InitScheme::he();
    Optimizer optimizer = Optimizer::Adam;
    double learning_rate = 0.0;  // 0 = optimizer default (sgd 0.01, adam 0.001)
    Eigen::Index input_dim = 64;
    Eigen::Index width = 64;       // student width N
    Eigen::Index hidden_layers = 10;  // student depth L
    Eigen::Index n_train = 10000;
    Eigen::Index n_val = 1000;
    Eigen::Index batch_size = 1000;
    Eigen::Index epochs = 200;
    std::uint64_t seed = 0;

    double lr() const {
        if (learning_rate > 0) return learning_rate;
        return optimizer == Optimizer::SGD ? 0.01 : 0.001;
    }

    void validate() const {
        student_init.validate();
        if (input_dim < 1 || width < 1 || hidden_layers < 1)
            throw std::invalid_argument("TrainConfig: bad architecture");
        if (n_train < 1 || n_val < 1 || batch_size < 1 || epochs < 1)
            throw std::invalid_argument("TrainConfig: bad training sizes");
    }

    /// Paper-scale settings: N = 100 student, 1e5 examples, batch 1000,
    /// 1e4 epochs for SGD / 1e3 for Adam.
    static TrainConfig paper(TeacherKind t, InitScheme s, Optimizer o, std::uint64_t seed) {
        TrainConfig c;
        c.teacher = t;
        c.student_init = s;
        c.optimizer = o;
        c.input_dim = 100;
        c.width = 100;
        c.hidden_layers = 10;
        c.n_train = 100000;
        c.n_val = 1000;
        c.batch_size = 1000;
        c.epochs = o == Optimizer::SGD ? 10000 : 1000;
        c.seed = seed;
        return c;
    }
};

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
    j = nlohmann::json{{"teacher", teacher_name(c.teacher)},
                       {"student_init", c.student_init},
                       {"optimizer", optimizer_name(c.optimizer)},
                       {"learning_rate", c.lr()},
                       {"input_dim", c.input_dim},
                       {"width", c.width},
                       {"hidden_layers", c.hidden_layers},
                       {"n_train", c.n_train},
                       {"n_val", c.n_val},
                       {"batch_size", c.batch_size},
                       {"epochs", c.epochs},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
    c.teacher = teacher_from_name(j.at("teacher").get<std::string>());
    c.student_init = j.at("student_init").get<InitScheme>();
    c.optimizer = optimizer_from_name(j.at("optimizer").get<std::string>());
    c.learning_rate = j.value("learning_rate", 0.0);
    c.input_dim = j.at("input_dim").get<Eigen::Index>();
    c.width = j.at("width").get<Eigen::Index>();
    c.hidden_layers = j.at("hidden_layers").get<Eigen::Index>();
    c.n_train = j.at("n_train").get<Eigen::Index>();
    c.n_val = j.at("n_val").get<Eigen::Index>();
    c.batch_size = j.at("batch_size").get<Eigen::Index>();
    c.epochs = j.at("epochs").get<Eigen::Index>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
}

inline Mlp make_teacher(TeacherKind kind, Eigen::Index input_dim, Eigen::Index student_width,
                        Eigen::Index student_layers, RandomStream& rng) {
    switch (kind) {
        case TeacherKind::Standard:
            return make_mlp(InitScheme::he(), input_dim, student_width, student_layers, 1,
                            Activation::ReLU, rng);
        case TeacherKind::Simple:
            return make_mlp(InitScheme::he(), input_dim, 10, 1, 1, Activation::ReLU, rng);
        case TeacherKind::Complex:
            return make_mlp(InitScheme::aci(1.5, 0.0, 0.0), input_dim, student_width,
                            student_layers, 1, Activation::Tanh, rng);
    }
    throw std::logic_error("bad teacher");
}

struct Dataset {
    Eigen::MatrixXd x;  // n x input_dim
    Eigen::MatrixXd y;  // n x 1
};

/// i.i.d. standard-normal inputs labeled by the teacher.
inline Dataset make_dataset(const Mlp& teacher, Eigen::Index n, Eigen::Index input_dim,
                            RandomStream& rng) {
    Dataset d;
    d.x.resize(n, input_dim);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < input_dim; ++j) d.x(i, j) = rng.normal();
    d.y = predict(teacher, d.x);
    return d;
}

struct TrainRun {
    TrainConfig config;
    std::vector<double> train_loss;  // per epoch (mean over batches)
    std::vector<double> val_loss;    // per epoch
    double epoch0_val_loss = 0.0;    // before the first update
    bool diverged = false;
    Eigen::Index epochs_completed = 0;
    double wall_time_s = 0.0;
    std::uint64_t final_params_digest = 0;

    double final_val_loss() const {
        if (diverged || val_loss.empty()) return std::numeric_limits<double>::infinity();
        return val_loss.back();
    }
};

// wall time stays out of the JSON so a rerun from the same config is
// byte-identical; the manifest carries timestamps.
inline nlohmann::json run_to_json(const TrainRun& r) {
    return {{"config", r.config},
            {"train_loss", r.train_loss},
            {"val_loss", r.val_loss},
            {"epoch0_val_loss", r.epoch0_val_loss},
            {"diverged", r.diverged},
            {"epochs_completed", r.epochs_completed},
            {"final_params_digest", r.final_params_digest}};
}

inline std::uint64_t params_digest(const Mlp& net) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (const auto& l : net.layers) {
        h = fnv1a64(l.weights.data(), sizeof(double) * static_cast<std::size_t>(l.weights.size()), h);
        h = fnv1a64(l.bias.data(), sizeof(double) * static_cast<std::size_t>(l.bias.size()), h);
    }
    return h;
}

/// Trains one student. Teacher, datasets, student init and the shuffling all
/// draw from streams keyed by (seed, role), so an identical config yields an
/// identical run. A non-finite loss or parameter set flags divergence and
/// ends the run with the partial log.
inline TrainRun run_experiment(const TrainConfig& cfg, std::optional<Mlp> student_override = {}) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    auto teacher_rs = RandomStream::from(cfg.seed, 0x7465616368ull /*"teach"*/);
    const Mlp teacher =
        make_teacher(cfg.teacher, cfg.input_dim, cfg.width, cfg.hidden_layers, teacher_rs);

    auto data_rs = RandomStream::from(cfg.seed, 0x64617461ull /*"data"*/);
    const Dataset train = make_dataset(teacher, cfg.n_train, cfg.input_dim, data_rs);
    const Dataset val = make_dataset(teacher, cfg.n_val, cfg.input_dim, data_rs);

    auto init_rs = RandomStream::from(cfg.seed, 0x696e6974ull /*"init"*/);
    Mlp student = student_override
                      ? std::move(*student_override)
                      : make_mlp(cfg.student_init, cfg.input_dim, cfg.width, cfg.hidden_layers, 1,
                                 Activation::ReLU, init_rs);

    auto shuffle_rs = RandomStream::from(cfg.seed, 0x73687566ull /*"shuf"*/);
    AdamState adam = AdamState::like(student);
    const AdamHyper hyper{cfg.lr(), 0.9, 0.999, 1e-7};

    TrainRun run;
    run.config = cfg;
    run.epoch0_val_loss = mse(predict(student, val.x), val.y);

    std::vector<Eigen::Index> order(cfg.n_train);
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd bx(cfg.batch_size, cfg.input_dim), by(cfg.batch_size, 1);

    for (Eigen::Index ep = 0; ep < cfg.epochs; ++ep) {
        // Fisher-Yates with the run's own stream
        for (Eigen::Index i = cfg.n_train - 1; i > 0; --i) {
            const auto j = static_cast<Eigen::Index>(
                shuffle_rs.uniform_index(static_cast<std::uint64_t>(i + 1)));
            std::swap(order[i], order[j]);
        }
        double epoch_loss = 0.0;
        Eigen::Index batches = 0;
        for (Eigen::Index s = 0; s + cfg.batch_size <= cfg.n_train; s += cfg.batch_size) {
            for (Eigen::Index b = 0; b < cfg.batch_size; ++b) {
                bx.row(b) = train.x.row(order[s + b]);
                by.row(b) = train.y.row(order[s + b]);
            }
            const ForwardCache cache = forward(student, bx);
            if (!cache.finite) {
                run.diverged = true;
                break;
            }
            epoch_loss += mse(cache.output, by);
            ++batches;
            const Gradients g = backward(student, cache, by);
            if (cfg.optimizer == Optimizer::SGD) {
                step_sgd(student, g, cfg.lr());
            } else {
                step_adam(student, g, adam, hyper);
            }
        }
        if (run.diverged || !student.finite()) {
            run.diverged = true;
            break;
        }
        run.train_loss.push_back(epoch_loss / static_cast<double>(batches));
        const double vl = mse(predict(student, val.x), val.y);
        run.val_loss.push_back(vl);
        run.epochs_completed = ep + 1;
        // a loss this size never recovers; treat runaway runs as diverged
        // before they hit the float ceiling
        constexpr double kDivergedLoss = 1e100;
        if (!std::isfinite(vl) || !std::isfinite(run.train_loss.back()) || vl > kDivergedLoss ||
            run.train_loss.back() > kDivergedLoss) {
            run.diverged = true;
            break;
        }
    }

    run.final_params_digest = params_digest(student);
    run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return run;
}

struct SchemeComparison {
    struct Entry {
        InitScheme scheme;
        std::vector<TrainRun> runs;        // one per seed
        std::vector<double> mean_val;      // per epoch over non-diverged runs
        std::vector<double> std_val;
        std::vector<std::uint64_t> diverged_seeds;

        double mean_final_val() const {
            return mean_val.empty() ? std::numeric_limits<double>::infinity() : mean_val.back();
        }
    };
    std::vector<Entry> entries;
};

/// One-sided Mann-Whitney p-value (normal approximation) for the hypothesis
/// that samples in `a` are stochastically smaller than samples in `b`.
inline double rank_sum_pvalue_less(std::vector<double> a, std::vector<double> b) {
    const std::size_t n1 = a.size(), n2 = b.size();
    if (n1 == 0 || n2 == 0) return 1.0;
    std::vector<std::pair<double, int>> all;
    for (double v : a) all.push_back({v, 0});
    for (double v : b) all.push_back({v, 1});
    std::sort(all.begin(), all.end());
    // midranks
    std::vector<double> ranks(all.size());
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j + 1 < all.size() && all[j + 1].first == all[i].first) ++j;
        const double r = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t t = i; t <= j; ++t) ranks[t] = r;
        i = j + 1;
    }
    double r1 = 0.0;
    for (std::size_t i = 0; i < all.size(); ++i)
        if (all[i].second == 0) r1 += ranks[i];
    const double u1 = r1 - static_cast<double>(n1) * (n1 + 1) / 2.0;
    const double mu = static_cast<double>(n1) * n2 / 2.0;
    const double sd = std::sqrt(static_cast<double>(n1) * n2 * (n1 + n2 + 1) / 12.0);
    if (sd == 0.0) return 1.0;
    const double z = (u1 - mu) / sd;
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);  // P(U <= u1) under H0
}

/// Trains every scheme over n_seeds seeds (parallel across runs, streams
/// keyed per run) and aggregates mean +- std validation curves. Diverged
/// runs are excluded from the means and listed.
inline SchemeComparison compare_schemes(const std::vector<InitScheme>& schemes,
                                        const TrainConfig& base, int n_seeds, int threads = 1) {
    if (schemes.size() < 1) throw std::invalid_argument("compare_schemes: no schemes");
    if (n_seeds < 1) throw std::invalid_argument("compare_schemes: n_seeds must be >= 1");

    struct Job {
        std::size_t scheme_idx;
        int seed_idx;
    };
    std::vector<Job> jobs;
    for (std::size_t s = 0; s < schemes.size(); ++s)
        for (int i = 0; i < n_seeds; ++i) jobs.push_back({s, i});

    std::vector<TrainRun> results(jobs.size());
    parallel_for(jobs.size(), threads, [&](std::size_t j) {
        TrainConfig cfg = base;
        cfg.student_init = schemes[jobs[j].scheme_idx];
        cfg.seed = derive_stream_key(base.seed, 0x72756eull /*"run"*/, jobs[j].seed_idx);
        results[j] = run_experiment(cfg);
    });

    SchemeComparison cmp;
    for (std::size_t s = 0; s < schemes.size(); ++s) {
        SchemeComparison::Entry e;
        e.scheme = schemes[s];
        for (std::size_t j = 0; j < jobs.size(); ++j)
            if (jobs[j].scheme_idx == s) e.runs.push_back(results[j]);
        const Eigen::Index epochs = base.epochs;
        e.mean_val.assign(epochs, 0.0);
        e.std_val.assign(epochs, 0.0);
        Eigen::Index healthy = 0;
        for (const auto& r : e.runs) {
            if (r.diverged) {
                e.diverged_seeds.push_back(r.config.seed);
                continue;
            }
            ++healthy;
            for (Eigen::Index ep = 0; ep < epochs; ++ep) {
                e.mean_val[ep] += r.val_loss[ep];
                e.std_val[ep] += r.val_loss[ep] * r.val_loss[ep];
            }
        }
        if (healthy > 0) {
            for (Eigen::Index ep = 0; ep < epochs; ++ep) {
                e.mean_val[ep] /= static_cast<double>(healthy);
                e.std_val[ep] = std::sqrt(
                    std::max(0.0, e.std_val[ep] / static_cast<double>(healthy) -
                                      e.mean_val[ep] * e.mean_val[ep]));
            }
        } else {
            e.mean_val.clear();
            e.std_val.clear();
        }
        cmp.entries.push_back(std::move(e));
    }
    return cmp;
}

}  // namespace corrprop::nn
