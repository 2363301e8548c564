#include "mslbm/commands.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <vector>

#include "mslbm/baselines.hpp"
#include "mslbm/clustering.hpp"
#include "mslbm/fit.hpp"
#include "mslbm/io.hpp"
#include "mslbm/metrics.hpp"
#include "mslbm/parallel.hpp"
#include "mslbm/sppmi.hpp"

namespace mslbm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw invalid_parameter("config: '" + section + "' must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end()) {
            throw invalid_parameter("config: unknown key '" + key + "' in '" + section + "'");
        }
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

Vector get_sigma(const json& sim, int m) {
    const json& s = sim.at("sigma");
    Vector out(m);
    if (s.is_number()) {
        out.setConstant(s.get<double>());
    } else if (s.is_array()) {
        if (static_cast<int>(s.size()) != m) {
            throw invalid_parameter("config: sigma array length must equal m");
        }
        for (int i = 0; i < m; ++i) out(i) = s[i].get<double>();
    } else {
        throw invalid_parameter("config: sigma must be a number or array");
    }
    return out;
}

SimConfig parse_sim(const json& sim) {
    check_keys(sim, "sim",
               {"n", "m", "K", "r", "setting", "pi0", "pi", "tau", "lambda_signal", "sigma",
                "noise_mass", "seed", "noise_on_diagonal", "theta_diagonal_zero"});
    SimConfig cfg;
    cfg.n = sim.at("n").get<int>();
    cfg.m = sim.at("m").get<int>();
    cfg.K = sim.at("K").get<int>();
    cfg.r = sim.at("r").get<int>();
    cfg.setting = get_or(sim, "setting", 1);
    cfg.pi0 = get_or(sim, "pi0", 0.2);
    cfg.pi = get_or(sim, "pi", 0.05);
    cfg.tau = get_or(sim, "tau", 5.0);
    cfg.lambda_signal = get_or(sim, "lambda_signal", 1.0);
    cfg.sigma = get_sigma(sim, cfg.m);
    cfg.noise_mass = get_or(sim, "noise_mass", 0.5);
    cfg.seed = sim.at("seed").get<std::uint64_t>();
    cfg.noise_on_diagonal = get_or(sim, "noise_on_diagonal", true);
    cfg.theta_diagonal_zero = get_or(sim, "theta_diagonal_zero", true);
    cfg.validate();
    return cfg;
}

json sim_to_json(const SimConfig& cfg) {
    json sigma = json::array();
    for (int s = 0; s < cfg.m; ++s) sigma.push_back(cfg.sigma(s));
    return json{{"n", cfg.n},
                {"m", cfg.m},
                {"K", cfg.K},
                {"r", cfg.r},
                {"setting", cfg.setting},
                {"pi0", cfg.pi0},
                {"pi", cfg.pi},
                {"tau", cfg.tau},
                {"lambda_signal", cfg.lambda_signal},
                {"sigma", sigma},
                {"noise_mass", cfg.noise_mass},
                {"seed", cfg.seed},
                {"noise_on_diagonal", cfg.noise_on_diagonal},
                {"theta_diagonal_zero", cfg.theta_diagonal_zero}};
}

// mu/tau are optional: absent means the per-view robust default
struct AsalmSettings {
    std::optional<double> mu;
    std::optional<double> tau;
    double beta = 1.0;
    int iter_max = 200;
    double tol = 1e-7;

    AsalmConfig resolve(const SymMatrix& w) const {
        AsalmConfig cfg = default_asalm_config(w, beta, iter_max, tol);
        if (mu) cfg.mu = *mu;
        if (tau) cfg.tau = *tau;
        cfg.validate();
        return cfg;
    }
};

AsalmSettings parse_asalm(const json& cfg) {
    check_keys(cfg, "asalm", {"mu", "tau", "beta", "iter_max", "tol"});
    AsalmSettings s;
    if (cfg.contains("mu")) s.mu = cfg.at("mu").get<double>();
    if (cfg.contains("tau")) s.tau = cfg.at("tau").get<double>();
    s.beta = get_or(cfg, "beta", 1.0);
    s.iter_max = get_or(cfg, "iter_max", 200);
    s.tol = get_or(cfg, "tol", 1e-7);
    return s;
}

struct FitSettings {
    std::optional<std::vector<double>> alpha;
    std::optional<std::vector<double>> lambda;
    std::optional<int> r;
    double kappa1 = 100.0;
    int iter_max = 100;
    double tol = 1e-6;
    FitMode mode = FitMode::inexact;
    int reh_iter_max = 100;
    double reh_tol = 1e-6;
};

FitSettings parse_fit(const json& cfg) {
    check_keys(cfg, "fit",
               {"r", "alpha", "lambda", "kappa1", "iter_max", "tol", "mode", "reh_iter_max",
                "reh_tol"});
    FitSettings s;
    if (cfg.contains("r")) s.r = cfg.at("r").get<int>();
    if (cfg.contains("alpha")) s.alpha = cfg.at("alpha").get<std::vector<double>>();
    if (cfg.contains("lambda")) s.lambda = cfg.at("lambda").get<std::vector<double>>();
    s.kappa1 = get_or(cfg, "kappa1", 100.0);
    s.iter_max = get_or(cfg, "iter_max", 100);
    s.tol = get_or(cfg, "tol", 1e-6);
    const std::string mode = get_or<std::string>(cfg, "mode", "inexact");
    if (mode == "exact") {
        s.mode = FitMode::exact;
    } else if (mode == "inexact") {
        s.mode = FitMode::inexact;
    } else {
        throw invalid_parameter("config: fit.mode must be 'exact' or 'inexact'");
    }
    s.reh_iter_max = get_or(cfg, "reh_iter_max", 100);
    s.reh_tol = get_or(cfg, "reh_tol", 1e-6);
    return s;
}

fs::path resolve_out_dir(const json& cfg, const CliOverrides& cli) {
    std::string out;
    if (cli.out_dir) {
        out = *cli.out_dir;
    } else if (cfg.contains("out_dir")) {
        out = cfg.at("out_dir").get<std::string>();
    } else {
        throw invalid_parameter("config: no output directory (set out_dir or pass --out)");
    }
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw io_error("cannot create output directory: " + out);
    return dir;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot open for writing: " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw io_error("write failed: " + path.string());
}

json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open for reading: " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw parse_error(path.string() + ": " + e.what());
    }
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

json load_config(const fs::path& path) {
    json cfg = read_json_file(path);
    check_keys(cfg, "<root>",
               {"out_dir", "input_dir", "sim", "asalm", "fit", "cluster", "benchmark", "select_k",
                "sppmi", "eval"});
    return cfg;
}

void cmd_simulate(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("sim")) throw invalid_parameter("config: simulate needs a 'sim' section");
    json sim_json = cfg.at("sim");
    if (cli.seed) sim_json["seed"] = *cli.seed;
    const SimConfig sim = parse_sim(sim_json);
    const fs::path dir = resolve_out_dir(cfg, cli);

    auto [views, truth] = gen_instance(sim);

    json manifest;
    manifest["schema"] = "mslbm-sim-v1";
    manifest["sim"] = sim_to_json(sim);
    json view_files = json::array();
    for (int s = 0; s < sim.m; ++s) {
        const std::string name = "w_" + std::to_string(s + 1) + ".bin";
        write_dense_binary(dir / name, views.views[s].mat());
        view_files.push_back(name);
    }
    manifest["views"] = view_files;

    write_labels_csv(dir / "truth_labels.csv", truth.membership.labels);
    write_dense_csv(dir / "truth_omega.csv", truth.omega.omega);
    Matrix h_all(sim.n, sim.m);
    for (int s = 0; s < sim.m; ++s) h_all.col(s) = truth.h[s].h;
    write_dense_csv(dir / "truth_h.csv", h_all);
    write_vector_csv(dir / "truth_sigma.csv", truth.sigma);
    json theta_files = json::array();
    for (int s = 0; s < sim.m; ++s) {
        const std::string name = "truth_theta_" + std::to_string(s + 1) + ".mtx";
        write_matrix_market_sym(dir / name, truth.theta[s]);
        theta_files.push_back(name);
    }
    manifest["truth"] = {{"labels", "truth_labels.csv"},
                         {"omega", "truth_omega.csv"},
                         {"h", "truth_h.csv"},
                         {"sigma", "truth_sigma.csv"},
                         {"theta", theta_files}};
    write_json(dir / "manifest.json", manifest);
}

namespace {

MultiViewData load_views(const fs::path& input_dir, json* manifest_out) {
    const json manifest = read_json_file(input_dir / "manifest.json");
    if (get_or<std::string>(manifest, "schema", "") != "mslbm-sim-v1") {
        throw parse_error((input_dir / "manifest.json").string() + ": unknown schema");
    }
    MultiViewData data;
    for (const auto& name : manifest.at("views")) {
        Matrix w = read_dense_binary(input_dir / name.get<std::string>());
        data.n = static_cast<int>(w.rows());
        data.views.emplace_back(std::move(w));
    }
    if (manifest_out) *manifest_out = manifest;
    return data;
}

LowRankFactor orthonormal_basis(const LowRankFactor& u) {
    Eigen::HouseholderQR<Matrix> qr(u.rows);
    Matrix q = qr.householderQ() * Matrix::Identity(u.n(), u.r());
    return LowRankFactor{std::move(q)};
}

}  // namespace

void cmd_fit(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("input_dir")) throw invalid_parameter("config: fit needs 'input_dir'");
    if (!cfg.contains("fit")) throw invalid_parameter("config: fit needs a 'fit' section");
    const fs::path input_dir(cfg.at("input_dir").get<std::string>());
    const fs::path dir = resolve_out_dir(cfg, cli);

    json fit_json = cfg.at("fit");
    if (cli.mode) fit_json["mode"] = *cli.mode;
    const FitSettings fs_ = parse_fit(fit_json);
    const AsalmSettings as =
        cfg.contains("asalm") ? parse_asalm(cfg.at("asalm")) : AsalmSettings{};

    json cluster_json = cfg.contains("cluster") ? cfg.at("cluster") : json::object();
    check_keys(cluster_json, "cluster", {"K", "restarts", "omega_threshold", "seed"});

    const auto t0 = std::chrono::steady_clock::now();

    json manifest;
    MultiViewData views = load_views(input_dir, &manifest);
    const int m = views.m();

    std::vector<AsalmConfig> asalm_cfgs;
    for (int s = 0; s < m; ++s) asalm_cfgs.push_back(as.resolve(views.views[s]));

    const int r = fs_.r ? *fs_.r : manifest.at("sim").at("r").get<int>();
    WarmStart ws = warm_start(views, r, asalm_cfgs);

    FitConfig fit_cfg;
    fit_cfg.r = r;
    fit_cfg.kappa1 = fs_.kappa1;
    fit_cfg.iter_max = fs_.iter_max;
    fit_cfg.tol = fs_.tol;
    fit_cfg.mode = fs_.mode;
    fit_cfg.reh_iter_max = fs_.reh_iter_max;
    fit_cfg.reh_tol = fs_.reh_tol;
    if (fs_.alpha) {
        fit_cfg.alpha = Eigen::Map<const Vector>(fs_.alpha->data(), fs_.alpha->size());
    } else {
        fit_cfg.alpha = ws.alpha;
    }
    if (fs_.lambda) {
        fit_cfg.lambda = Eigen::Map<const Vector>(fs_.lambda->data(), fs_.lambda->size());
    } else {
        fit_cfg.lambda = ws.lambda;
    }

    ModelEstimate est = fit(views, fit_cfg, ws.init);

    const int K = cluster_json.contains("K") ? cluster_json.at("K").get<int>()
                                             : manifest.at("sim").at("K").get<int>();
    const int restarts = get_or(cluster_json, "restarts", 10);
    const double omega_threshold = get_or(cluster_json, "omega_threshold", 0.0);
    const std::uint64_t cluster_seed =
        cli.seed ? *cli.seed : get_or<std::uint64_t>(cluster_json, "seed", 20240101ULL);

    KMeansResult km = kmeans(est.u, K, restarts, RngStream(cluster_seed));
    Matrix c_hat = est.u.rows * est.u.rows.transpose();
    GroupWeights omega = omega_hat(km.labels, SymMatrix(0.5 * (c_hat + c_hat.transpose().eval())),
                                   omega_threshold);

    write_dense_csv(dir / "u.csv", est.u.rows);
    Matrix h_all(views.n, m);
    for (int s = 0; s < m; ++s) h_all.col(s) = est.h[s].h;
    write_dense_csv(dir / "h.csv", h_all);
    for (int s = 0; s < m; ++s) {
        write_matrix_market_sym(dir / ("theta_" + std::to_string(s + 1) + ".mtx"), est.theta[s]);
    }
    write_dense_binary(dir / "c_hat.bin", c_hat);
    write_labels_csv(dir / "labels.csv", km.labels.labels);
    write_dense_csv(dir / "omega_hat.csv", omega.omega);

    json report;
    report["schema"] = "mslbm-fit-v1";
    report["r"] = r;
    report["mode"] = fit_cfg.mode == FitMode::exact ? "exact" : "inexact";
    report["iterations"] = est.iterations;
    report["objective_trace"] = est.objective_trace;
    report["kappa_trace"] = est.kappa_trace;
    report["kappa1"] = fit_cfg.kappa1;
    json kappa_warnings = json::array();
    for (std::size_t t = 0; t < est.kappa_trace.size(); ++t) {
        if (est.kappa_trace[t] * est.kappa_trace[t] > fit_cfg.kappa1) {
            kappa_warnings.push_back(t + 1);
        }
    }
    report["kappa_violations"] = kappa_warnings;
    report["alpha"] = std::vector<double>(fit_cfg.alpha.data(), fit_cfg.alpha.data() + m);
    report["lambda"] = std::vector<double>(fit_cfg.lambda.data(), fit_cfg.lambda.data() + m);
    report["sigma_hat"] = std::vector<double>(ws.sigma_hat.data(), ws.sigma_hat.data() + m);
    report["h_hat"] = std::vector<double>(ws.h_hat.data(), ws.h_hat.data() + m);
    report["rank_by_view"] = ws.rank_by_view;
    report["kmeans_objective"] = km.objective;

    // score against the ground truth when the input directory carries one
    if (manifest.contains("truth")) {
        const std::vector<int> true_labels =
            read_labels_csv(input_dir / manifest.at("truth").at("labels").get<std::string>());
        const int true_k = manifest.at("sim").at("K").get<int>();
        Membership truth{true_labels, true_k};
        report["mce"] = mce(km.labels, truth);
    }
    write_json(dir / "report.json", report);

    // wall time lives in its own file so everything above is reproducible
    write_json(dir / "timings.json", json{{"wall_time_seconds", elapsed_seconds(t0)}});
}

namespace {

struct BenchKey {
    std::string method;
    int setting = 0;
    int K = 0;
    double lambda_signal = 0.0;
    std::uint64_t seed = 0;

    bool operator<(const BenchKey& o) const {
        return std::tie(method, setting, K, lambda_signal, seed) <
               std::tie(o.method, o.setting, o.K, o.lambda_signal, o.seed);
    }
};

struct BenchRow {
    std::optional<double> mce;
    std::optional<double> l2_omega;
    std::optional<double> l0_theta;
    std::optional<double> eig_dist;
    double runtime_seconds = 0.0;
    std::string error;
};

std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

double aligned_omega_l2(const Membership& labels, const GroupWeights& om, const Membership& truth,
                        const Matrix& omega_true) {
    const MceMatching match = mce_with_matching(labels, truth);
    const int K = static_cast<int>(omega_true.rows());
    Matrix aligned = Matrix::Zero(K, K);
    for (int k = 0; k < om.K; ++k) {
        for (int l = 0; l < om.K; ++l) {
            if (match.perm[k] < K && match.perm[l] < K) {
                aligned(match.perm[k], match.perm[l]) = om.omega(k, l);
            }
        }
    }
    return rel_l2(aligned, omega_true);
}

}  // namespace

void cmd_benchmark(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("benchmark")) {
        throw invalid_parameter("config: benchmark needs a 'benchmark' section");
    }
    const json& bench = cfg.at("benchmark");
    check_keys(bench, "benchmark",
               {"settings", "k_values", "lambda_signals", "seeds", "methods", "sim", "fit",
                "asalm", "restarts"});
    const fs::path dir = resolve_out_dir(cfg, cli);

    const std::vector<int> settings = get_or(bench, "settings", std::vector<int>{1});
    const std::vector<int> k_values = bench.at("k_values").get<std::vector<int>>();
    const std::vector<double> lambda_signals =
        get_or(bench, "lambda_signals", std::vector<double>{1.0});
    std::vector<std::uint64_t> seeds = bench.at("seeds").get<std::vector<std::uint64_t>>();
    if (cli.seed) seeds = {*cli.seed};
    const std::vector<std::string> methods = get_or(
        bench, "methods",
        std::vector<std::string>{"mslbm", "sam_mean", "sam_median", "mase", "mase_scaled",
                                 "single_view"});
    const int restarts = get_or(bench, "restarts", 10);

    json base_sim = bench.at("sim");
    const FitSettings fs_ = bench.contains("fit") ? parse_fit(bench.at("fit")) : FitSettings{};
    const AsalmSettings as =
        bench.contains("asalm") ? parse_asalm(bench.at("asalm")) : AsalmSettings{};
    FitSettings fit_settings = fs_;
    if (cli.mode) fit_settings.mode = *cli.mode == "exact" ? FitMode::exact : FitMode::inexact;

    struct Cell {
        int setting;
        int K;
        double lambda_signal;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (int setting : settings) {
        for (int K : k_values) {
            for (double ls : lambda_signals) {
                for (std::uint64_t seed : seeds) cells.push_back({setting, K, ls, seed});
            }
        }
    }

    std::map<BenchKey, BenchRow> table;
    std::mutex table_mutex;

    parallel_for(static_cast<int>(cells.size()), [&](int ci) {
        const Cell& cell = cells[static_cast<std::size_t>(ci)];
        json sim_json = base_sim;
        sim_json["setting"] = cell.setting;
        sim_json["K"] = cell.K;
        sim_json["lambda_signal"] = cell.lambda_signal;
        sim_json["seed"] = cell.seed;
        const SimConfig sim = parse_sim(sim_json);

        auto [views, truth] = gen_instance(sim);
        const SymMatrix c_true = assemble_c(truth.membership, truth.omega);
        const LowRankFactor u_true{sym_eigen(c_true).vectors.leftCols(sim.r)};

        std::map<BenchKey, BenchRow> local;
        auto key_of = [&](const std::string& method) {
            return BenchKey{method, cell.setting, cell.K, cell.lambda_signal, cell.seed};
        };
        auto want = [&](const std::string& method) {
            return std::find(methods.begin(), methods.end(), method) != methods.end();
        };
        RngStream cell_rng(cell.seed);

        // the warm start is shared by the mslbm and single_view methods;
        // its cost is charged to whichever of the two runs first
        std::optional<WarmStart> ws;
        auto ensure_warm = [&]() {
            if (ws) return;
            std::vector<AsalmConfig> cfgs;
            for (int s = 0; s < sim.m; ++s) cfgs.push_back(as.resolve(views.views[s]));
            ws = warm_start(views, sim.r, cfgs);
        };

        auto record = [&](const std::string& method, BenchRow row) {
            local.emplace(key_of(method), std::move(row));
        };
        auto guarded = [&](const std::string& method, auto&& body) {
            if (!want(method)) return;
            const auto t0 = std::chrono::steady_clock::now();
            BenchRow row;
            try {
                body(row);
            } catch (const error& e) {
                row = BenchRow{};
                row.error = e.what();
            }
            row.runtime_seconds = elapsed_seconds(t0);
            record(method, std::move(row));
        };

        guarded("mslbm", [&](BenchRow& row) {
            ensure_warm();
            FitConfig fc;
            fc.r = sim.r;
            fc.alpha = fit_settings.alpha
                           ? Eigen::Map<const Vector>(fit_settings.alpha->data(),
                                                      fit_settings.alpha->size())
                           : ws->alpha;
            fc.lambda = fit_settings.lambda
                            ? Eigen::Map<const Vector>(fit_settings.lambda->data(),
                                                       fit_settings.lambda->size())
                            : ws->lambda;
            fc.kappa1 = fit_settings.kappa1;
            fc.iter_max = fit_settings.iter_max;
            fc.tol = fit_settings.tol;
            fc.mode = fit_settings.mode;
            fc.reh_iter_max = fit_settings.reh_iter_max;
            fc.reh_tol = fit_settings.reh_tol;

            ModelEstimate est = fit(views, fc, ws->init);
            KMeansResult km = kmeans(est.u, sim.K, restarts, cell_rng.substream("mslbm"));
            row.mce = mce(km.labels, truth.membership);

            Matrix c_hat = est.u.rows * est.u.rows.transpose();
            const SymMatrix c_sym(0.5 * (c_hat + c_hat.transpose().eval()));
            GroupWeights om = omega_hat(km.labels, c_sym);
            row.l2_omega = aligned_omega_l2(km.labels, om, truth.membership, truth.omega.omega);

            double l0 = 0.0;
            for (int s = 0; s < sim.m; ++s) {
                l0 += l0_loss(est.theta[s].dense(), truth.theta[s].dense(),
                              static_cast<double>(sim.K) * sim.K);
            }
            row.l0_theta = l0 / sim.m;
            row.eig_dist = projector_distance(orthonormal_basis(est.u), u_true);
        });

        guarded("sam_mean", [&](BenchRow& row) {
            BaselineEmbedding emb = sam_embed(views, sim.r);
            KMeansResult km = kmeans(emb.u, sim.K, restarts, cell_rng.substream("sam_mean"));
            row.mce = mce(km.labels, truth.membership);
            row.eig_dist = projector_distance(emb.u, u_true);
        });

        guarded("sam_median", [&](BenchRow& row) {
            BaselineEmbedding emb = sam_embed(views, sim.r);
            LowRankFactor normalized = normalize_rows(emb.u);
            KMeansResult km =
                kmedian(normalized, sim.K, restarts, cell_rng.substream("sam_median"));
            row.mce = mce(km.labels, truth.membership);
            row.eig_dist = projector_distance(emb.u, u_true);
        });

        for (const bool scaled : {false, true}) {
            guarded(scaled ? "mase_scaled" : "mase", [&](BenchRow& row) {
                BaselineEmbedding emb = mase_embed(views, sim.r, scaled);
                KMeansResult km = kmeans(emb.u, sim.K, restarts,
                                         cell_rng.substream(scaled ? "mase_scaled" : "mase"));
                row.mce = mce(km.labels, truth.membership);
                row.eig_dist = projector_distance(emb.u, u_true);
            });
        }

        guarded("single_view", [&](BenchRow& row) {
            ensure_warm();
            double sum_mce = 0.0, sum_l2 = 0.0, sum_l0 = 0.0;
            for (int s = 0; s < sim.m; ++s) {
                RecResult rc = rec(ws->asalm[static_cast<std::size_t>(s)].low_rank, sim.r);
                KMeansResult km = kmeans(
                    rc.u, sim.K, restarts,
                    cell_rng.substream("single_view", static_cast<std::uint64_t>(s)));
                sum_mce += mce(km.labels, truth.membership);
                GroupWeights om = omega_hat(km.labels, rc.c);
                sum_l2 += aligned_omega_l2(km.labels, om, truth.membership, truth.omega.omega);
                sum_l0 += l0_loss(ws->asalm[static_cast<std::size_t>(s)].theta.dense(),
                                  truth.theta[s].dense(), static_cast<double>(sim.K) * sim.K);
            }
            row.mce = sum_mce / sim.m;
            row.l2_omega = sum_l2 / sim.m;
            row.l0_theta = sum_l0 / sim.m;
        });

        std::lock_guard<std::mutex> lock(table_mutex);
        for (auto& [k, v] : local) table.emplace(std::move(k), std::move(v));
    });

    // one row per (method, cell), sorted by key; runtimes go to a sidecar
    std::ofstream results(dir / "results.csv");
    if (!results) throw io_error("cannot write results.csv");
    std::ofstream timings(dir / "timings.csv");
    if (!timings) throw io_error("cannot write timings.csv");
    results << "method,setting,K,lambda_signal,seed,mce,l2_omega,l0_theta,eig_dist,error\n";
    timings << "method,setting,K,lambda_signal,seed,runtime_seconds\n";
    for (const auto& [key, row] : table) {
        const std::string prefix = key.method + "," + std::to_string(key.setting) + "," +
                                   std::to_string(key.K) + "," + format_double(key.lambda_signal) +
                                   "," + std::to_string(key.seed);
        std::string err = row.error;
        for (char& c : err) {
            if (c == '"' || c == ',') c = ';';
        }
        results << prefix << ',' << opt_str(row.mce) << ',' << opt_str(row.l2_omega) << ','
                << opt_str(row.l0_theta) << ',' << opt_str(row.eig_dist) << ','
                << (err.empty() ? std::string() : "\"" + err + "\"") << '\n';
        timings << prefix << ',' << format_double(row.runtime_seconds) << '\n';
    }
    results.close();
    timings.close();

    // per-figure aggregation: mean over seeds of each metric
    struct AggKey {
        std::string method;
        int setting;
        int K;
        double lambda_signal;
        bool operator<(const AggKey& o) const {
            return std::tie(method, setting, K, lambda_signal) <
                   std::tie(o.method, o.setting, o.K, o.lambda_signal);
        }
    };
    struct Acc {
        double sum = 0.0;
        int count = 0;
    };
    std::map<AggKey, std::array<Acc, 4>> agg;
    for (const auto& [key, row] : table) {
        auto& slot = agg[AggKey{key.method, key.setting, key.K, key.lambda_signal}];
        const std::array<const std::optional<double>*, 4> metrics = {&row.mce, &row.l2_omega,
                                                                     &row.l0_theta, &row.eig_dist};
        for (int i = 0; i < 4; ++i) {
            if (*metrics[static_cast<std::size_t>(i)]) {
                slot[static_cast<std::size_t>(i)].sum += **metrics[static_cast<std::size_t>(i)];
                slot[static_cast<std::size_t>(i)].count += 1;
            }
        }
    }
    std::ofstream aggout(dir / "aggregate.csv");
    if (!aggout) throw io_error("cannot write aggregate.csv");
    aggout << "method,setting,K,lambda_signal,mean_mce,mean_l2_omega,mean_l0_theta,mean_eig_dist\n";
    for (const auto& [key, accs] : agg) {
        aggout << key.method << ',' << key.setting << ',' << key.K << ','
               << format_double(key.lambda_signal);
        for (const Acc& a : accs) {
            aggout << ',' << (a.count > 0 ? format_double(a.sum / a.count) : std::string());
        }
        aggout << '\n';
    }
}

void cmd_select_k(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("select_k")) {
        throw invalid_parameter("config: select-k needs a 'select_k' section");
    }
    const json& sk = cfg.at("select_k");
    check_keys(sk, "select_k",
               {"embedding", "k_grid", "restarts", "seed", "positive_pairs", "negative_pairs"});
    const fs::path dir = resolve_out_dir(cfg, cli);

    const LowRankFactor u{read_dense_csv(sk.at("embedding").get<std::string>())};
    const std::vector<int> k_grid = sk.at("k_grid").get<std::vector<int>>();
    const int restarts = get_or(sk, "restarts", 10);
    const std::uint64_t seed = cli.seed ? *cli.seed : get_or<std::uint64_t>(sk, "seed", 20240101ULL);

    json out;
    KSelectionReport report;
    if (sk.contains("positive_pairs") != sk.contains("negative_pairs")) {
        throw invalid_parameter("config: select_k needs both pair files or neither");
    }
    if (sk.contains("positive_pairs")) {
        const VertexPairs pos = read_pairs_csv(sk.at("positive_pairs").get<std::string>());
        const VertexPairs neg = read_pairs_csv(sk.at("negative_pairs").get<std::string>());
        auto [best, rep] = select_k_pairs(u, k_grid, pos, neg, restarts, RngStream(seed));
        report = std::move(rep);
        out["best_k"] = best;
    } else {
        report = select_k_unsupervised(u, k_grid, restarts, RngStream(seed));
    }

    std::ofstream csv(dir / "kselect.csv");
    if (!csv) throw io_error("cannot write kselect.csv");
    csv << "K,wss,silhouette,composite\n";
    for (const KCandidate& c : report.candidates) {
        csv << c.K << ',' << format_double(c.wss) << ','
            << (c.silhouette ? format_double(*c.silhouette) : std::string()) << ','
            << (c.composite ? format_double(*c.composite) : std::string()) << '\n';
    }
    csv.close();
    write_json(dir / "kselect.json", out);
}

void cmd_sppmi(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("sppmi")) throw invalid_parameter("config: sppmi needs a 'sppmi' section");
    const json& sp = cfg.at("sppmi");
    check_keys(sp, "sppmi", {"counts", "marginals", "shift", "output", "format"});
    const fs::path dir = resolve_out_dir(cfg, cli);

    int n = 0;
    std::vector<CountEntry> entries = read_matrix_market_counts(sp.at("counts").get<std::string>(), &n);
    CooccurrenceCounts counts;
    if (sp.contains("marginals")) {
        const Vector marg = read_vector_csv(sp.at("marginals").get<std::string>());
        counts.n = n;
        counts.counts = std::move(entries);
        counts.marginals.resize(static_cast<std::size_t>(marg.size()));
        for (Eigen::Index i = 0; i < marg.size(); ++i) {
            counts.marginals[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(marg(i));
        }
        for (const auto& e : counts.counts) counts.total += e.count;
        counts.validate();
    } else {
        counts = CooccurrenceCounts::from_counts(n, std::move(entries));
    }

    const double shift = get_or(sp, "shift", 0.0);
    const SymMatrix w = build_sppmi(counts, shift);

    const std::string name = get_or<std::string>(sp, "output", "sppmi.bin");
    const std::string format = get_or<std::string>(sp, "format", "dense_binary");
    if (format == "dense_binary") {
        write_dense_binary(dir / name, w.mat());
    } else if (format == "dense_csv") {
        write_dense_csv(dir / name, w.mat());
    } else {
        throw invalid_parameter("config: sppmi.format must be dense_binary or dense_csv");
    }
}

void cmd_eval(const json& cfg, const CliOverrides& cli) {
    if (!cfg.contains("eval")) throw invalid_parameter("config: eval needs an 'eval' section");
    const json& ev = cfg.at("eval");
    check_keys(ev, "eval",
               {"c_matrix", "format", "embedding", "annotations", "relations", "fpr_targets"});
    const fs::path dir = resolve_out_dir(cfg, cli);

    Matrix c;
    if (ev.contains("c_matrix")) {
        const std::string format = get_or<std::string>(ev, "format", "dense_binary");
        MatrixFormat mf;
        if (format == "dense_binary") {
            mf = MatrixFormat::dense_binary;
        } else if (format == "dense_csv") {
            mf = MatrixFormat::dense_csv;
        } else if (format == "matrix_market") {
            mf = MatrixFormat::matrix_market;
        } else {
            throw invalid_parameter("config: eval.format unknown");
        }
        c = read_sym_matrix(ev.at("c_matrix").get<std::string>(), mf).mat();
    } else if (ev.contains("embedding")) {
        // unit rows make cosine similarity equal the inner product
        const LowRankFactor u{read_dense_csv(ev.at("embedding").get<std::string>())};
        const LowRankFactor un = normalize_rows(u);
        c = un.rows * un.rows.transpose();
    } else {
        throw invalid_parameter("config: eval needs 'c_matrix' or 'embedding'");
    }
    const int n = static_cast<int>(c.rows());

    auto check_pair = [&](int i, int j, std::vector<std::string>& offenders) {
        if (i < 0 || i >= n || j < 0 || j >= n) {
            offenders.push_back("(" + std::to_string(i) + "," + std::to_string(j) + ")");
        }
    };

    json out;
    if (ev.contains("annotations")) {
        const auto pairs = read_annotated_pairs_csv(ev.at("annotations").get<std::string>());
        if (pairs.empty()) throw invalid_parameter("eval: empty annotations file");
        std::vector<std::string> offenders;
        for (const auto& p : pairs) check_pair(p.i, p.j, offenders);
        if (!offenders.empty()) {
            std::string msg = "eval: annotation vertex ids out of range:";
            for (const auto& o : offenders) msg += " " + o;
            throw invalid_parameter(msg);
        }
        Vector scores(static_cast<Eigen::Index>(pairs.size()));
        Vector values(static_cast<Eigen::Index>(pairs.size()));
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            scores(static_cast<Eigen::Index>(i)) = c(pairs[i].i, pairs[i].j);
            values(static_cast<Eigen::Index>(i)) = pairs[i].value;
        }
        out["spearman"] = spearman(scores, values);
    }
    if (ev.contains("relations")) {
        const auto rel = read_annotated_pairs_csv(ev.at("relations").get<std::string>());
        std::vector<std::string> offenders;
        for (const auto& p : rel) check_pair(p.i, p.j, offenders);
        if (!offenders.empty()) {
            std::string msg = "eval: relation vertex ids out of range:";
            for (const auto& o : offenders) msg += " " + o;
            throw invalid_parameter(msg);
        }
        PairScoreSet set;
        set.scores = Vector(static_cast<Eigen::Index>(rel.size()));
        for (std::size_t i = 0; i < rel.size(); ++i) {
            set.pairs.push_back({rel[i].i, rel[i].j,
                                 rel[i].value > 0.0 ? PairLabel::positive : PairLabel::negative});
            set.scores(static_cast<Eigen::Index>(i)) = c(rel[i].i, rel[i].j);
        }
        std::vector<double> targets = get_or(ev, "fpr_targets", std::vector<double>{0.01, 0.05, 0.10});
        const Vector fpr = Eigen::Map<const Vector>(targets.data(), targets.size());
        const AucResult auc = auc_tpr(set, fpr);
        out["auc"] = auc.auc;
        out["fpr_targets"] = targets;
        out["tpr_at"] = std::vector<double>(auc.tpr_at.data(), auc.tpr_at.data() + auc.tpr_at.size());
    }
    write_json(dir / "eval.json", out);
}

}  // namespace mslbm
