// crisp: command-line front end for building, querying and benchmarking CRISP indexes.
//
//   crisp synth        generate a synthetic fvecs corpus (and optional queries)
//   crisp groundtruth  exact k-NN ground truth as ivecs
//   crisp build        train and serialize an index
//   crisp search       run a query batch, write result ids, report recall/QPS
//   crisp sweep        grid over search knobs, emit all rows plus the Pareto front
//   crisp theory       Hoeffding bound vs exact tail vs simulation, as CSV
//
// Exit status: 0 success, 1 argument error, 2 I/O or format error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crisp/crisp.hpp"

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double parse_factor(const json& value) {
    if (value.is_string()) {
        const auto text = value.get<std::string>();
        if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
        return std::stod(text);
    }
    if (value.is_null()) return std::numeric_limits<double>::infinity();
    return value.get<double>();
}

// Search knobs as CLI options; a JSON config file supplies defaults and
// explicitly passed flags win.
struct SearchOptions {
    std::string config_path;
    std::string mode = "guaranteed";
    std::size_t k = 10;
    double budget_ratio = 0.05;
    double min_collision_ratio = 0.5;
    std::string patience_factor = "40";
    double eps0 = crisp::kDefaultEps0;
    std::size_t ad_stride = crisp::kDefaultAdStride;

    CLI::Option* mode_opt = nullptr;
    CLI::Option* k_opt = nullptr;
    CLI::Option* budget_opt = nullptr;
    CLI::Option* collision_opt = nullptr;
    CLI::Option* patience_opt = nullptr;
    CLI::Option* eps0_opt = nullptr;
    CLI::Option* stride_opt = nullptr;

    void attach(CLI::App* app, bool grid_knobs) {
        app->add_option("--config", config_path, "JSON file with search settings (flags override)");
        if (grid_knobs) {
            mode_opt = app->add_option("--mode", mode, "guaranteed|optimized");
            budget_opt = app->add_option("--budget-ratio", budget_ratio, "fraction of N streamed per subspace");
            collision_opt = app->add_option("--min-collision-ratio", min_collision_ratio,
                                            "tau = ceil(ratio * M)");
        }
        k_opt = app->add_option("--k", k, "neighbors per query");
        patience_opt = app->add_option("--patience-factor", patience_factor,
                                       "early-termination patience as a multiple of k ('inf' disables)");
        eps0_opt = app->add_option("--eps0", eps0, "ADSampling safety margin");
        stride_opt = app->add_option("--ad-stride", ad_stride, "dimensions between ADSampling checks");
    }

    crisp::SearchConfig resolve() const {
        crisp::SearchConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) throw crisp::IoError("cannot open config file: " + config_path);
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw crisp::FormatError("config file " + config_path + ": " + e.what());
            }
            if (j.contains("mode")) cfg.mode = crisp::parse_mode(j["mode"].get<std::string>());
            if (j.contains("k")) cfg.k = j["k"].get<std::size_t>();
            if (j.contains("budget_ratio")) cfg.budget_ratio = j["budget_ratio"].get<double>();
            if (j.contains("min_collision_ratio")) cfg.min_collision_ratio = j["min_collision_ratio"].get<double>();
            if (j.contains("patience_factor")) cfg.patience_factor = parse_factor(j["patience_factor"]);
            if (j.contains("eps0")) cfg.eps0 = j["eps0"].get<double>();
            if (j.contains("ad_stride")) cfg.ad_stride = j["ad_stride"].get<std::size_t>();
        }
        auto given = [](const CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
        const bool from_file = !config_path.empty();
        if (given(mode_opt) || (!from_file && mode_opt)) cfg.mode = crisp::parse_mode(mode);
        if (given(k_opt) || !from_file) cfg.k = k;
        if (given(budget_opt) || (!from_file && budget_opt)) cfg.budget_ratio = budget_ratio;
        if (given(collision_opt) || (!from_file && collision_opt)) cfg.min_collision_ratio = min_collision_ratio;
        if (given(patience_opt) || !from_file) cfg.patience_factor = parse_factor(json(patience_factor));
        if (given(eps0_opt) || !from_file) cfg.eps0 = eps0;
        if (given(stride_opt) || !from_file) cfg.ad_stride = ad_stride;
        return cfg;
    }
};

json config_json(const crisp::SearchConfig& c) {
    json j;
    j["mode"] = crisp::to_string(c.mode);
    j["k"] = c.k;
    j["budget_ratio"] = c.budget_ratio;
    j["min_collision_ratio"] = c.min_collision_ratio;
    j["patience_factor"] = std::isfinite(c.patience_factor) ? json(c.patience_factor) : json("inf");
    j["eps0"] = c.eps0;
    j["ad_stride"] = c.ad_stride;
    return j;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> values;
    for (const auto& item : split_list(text)) {
        try {
            std::size_t used = 0;
            if constexpr (std::is_floating_point_v<T>) {
                values.push_back(static_cast<T>(std::stod(item, &used)));
            } else {
                values.push_back(static_cast<T>(std::stoull(item, &used)));
            }
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw crisp::ArgumentError(std::string("bad value '") + item + "' in " + what);
        }
    }
    return values;
}

crisp::GroundTruth results_to_ivecs(const std::vector<std::vector<crisp::Neighbor>>& results, std::size_t k) {
    crisp::GroundTruth out;
    out.q = results.size();
    out.k = k;
    out.ids.assign(out.q * k, -1); // short rows are padded with -1
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (std::size_t j = 0; j < results[i].size() && j < k; ++j) out.ids[i * k + j] = results[i][j].id;
    }
    return out;
}

struct BuildOptions {
    std::size_t subspaces = 0;
    std::size_t centroids = crisp::kDefaultCentroids;
    double tau_cev = crisp::kDefaultTauCev;
    std::uint64_t seed = 42;
    std::size_t iterations = crisp::kDefaultKMeansIterations;
    std::size_t training_sample = crisp::kMaxTrainingSample;
    bool no_padding = false;

    void attach(CLI::App* app, bool require_subspaces) {
        auto* m = app->add_option("--subspaces", subspaces, "number of subspaces M");
        if (require_subspaces) m->required();
        app->add_option("--centroids", centroids, "centroids per half-subspace K");
        app->add_option("--tau-cev", tau_cev, "CEV threshold that triggers rotation");
        app->add_option("--seed", seed, "RNG seed");
        app->add_option("--kmeans-iters", iterations, "Lloyd iterations per codebook");
        app->add_option("--training-sample", training_sample, "max points per codebook");
        app->add_flag("--no-padding", no_padding, "reject D not divisible by 2M instead of zero-padding");
    }

    crisp::BuildParams params(std::size_t m) const {
        crisp::BuildParams p;
        p.subspaces = m;
        p.centroids = centroids;
        p.tau_cev = tau_cev;
        p.seed = seed;
        p.kmeans_iterations = iterations;
        p.training_sample = training_sample;
        p.allow_padding = !no_padding;
        return p;
    }
};

struct Built {
    crisp::CrispIndex index;
    double seconds = 0.0;
};

Built timed_build(crisp::DatasetMatrix data, const crisp::BuildParams& params) {
    const auto start = Clock::now();
    Built b{crisp::build_index(std::move(data), params), 0.0};
    b.seconds = seconds_since(start);
    return b;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRISP approximate nearest-neighbor index"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic fvecs corpus");
    std::string synth_kind = "isotropic";
    std::size_t synth_n = 10000, synth_d = 64, synth_rank = 8, synth_queries = 0;
    std::uint64_t synth_seed = 42;
    float synth_sigma = 0.05f;
    std::string synth_out, synth_queries_out;
    synth->add_option("--kind", synth_kind, "isotropic|axis|correlated");
    synth->add_option("--n", synth_n, "number of vectors");
    synth->add_option("--dim", synth_d, "dimensionality");
    synth->add_option("--rank", synth_rank, "active dims (axis) or latent rank (correlated)");
    synth->add_option("--seed", synth_seed, "RNG seed");
    synth->add_option("--out", synth_out, "output fvecs")->required();
    synth->add_option("--num-queries", synth_queries, "also emit this many perturbed queries");
    synth->add_option("--query-sigma", synth_sigma, "query perturbation stddev");
    synth->add_option("--queries-out", synth_queries_out, "query fvecs path");

    // groundtruth
    auto* gt_cmd = app.add_subcommand("groundtruth", "exact k-NN ground truth");
    std::string gt_dataset, gt_queries, gt_out;
    std::size_t gt_k = 100;
    gt_cmd->add_option("--dataset", gt_dataset, "corpus fvecs")->required();
    gt_cmd->add_option("--queries", gt_queries, "query fvecs")->required();
    gt_cmd->add_option("--k", gt_k, "neighbors per query");
    gt_cmd->add_option("--out", gt_out, "output ivecs")->required();

    // build
    auto* build = app.add_subcommand("build", "build and save an index");
    std::string build_dataset, build_out;
    BuildOptions build_opts;
    build->add_option("--dataset", build_dataset, "corpus fvecs")->required();
    build->add_option("--out", build_out, "index file")->required();
    build_opts.attach(build, true);

    // search
    auto* search = app.add_subcommand("search", "run a query batch against an index");
    std::string search_index, search_queries, search_gt, search_out;
    bool search_parallel = false;
    SearchOptions search_opts;
    search->add_option("--index", search_index, "index file")->required();
    search->add_option("--queries", search_queries, "query fvecs")->required();
    search->add_option("--gt", search_gt, "ground-truth ivecs (enables recall)");
    search->add_option("--out", search_out, "result ids ivecs");
    search->add_flag("--parallel", search_parallel, "run the batch across worker threads");
    search_opts.attach(search, true);

    // sweep
    auto* sweep = app.add_subcommand("sweep", "parameter grid producing Pareto CSVs");
    std::string sweep_index, sweep_dataset, sweep_queries, sweep_gt, sweep_out, sweep_pareto_out;
    std::string sweep_budgets = "0.001,0.005,0.01,0.02,0.04,0.06";
    std::string sweep_collisions = "0.1,0.2,0.3,0.4,0.5,0.6";
    std::string sweep_modes = "guaranteed,optimized";
    std::string sweep_subspaces_list;
    bool sweep_parallel = false;
    SearchOptions sweep_opts;
    BuildOptions sweep_build;
    sweep->add_option("--index", sweep_index, "prebuilt index file");
    sweep->add_option("--dataset", sweep_dataset, "corpus fvecs (rebuilds per --subspaces-list entry)");
    sweep->add_option("--queries", sweep_queries, "query fvecs")->required();
    sweep->add_option("--gt", sweep_gt, "ground-truth ivecs")->required();
    sweep->add_option("--budget-ratios", sweep_budgets, "comma list");
    sweep->add_option("--min-collision-ratios", sweep_collisions, "comma list");
    sweep->add_option("--modes", sweep_modes, "comma list of guaranteed|optimized");
    sweep->add_option("--subspaces-list", sweep_subspaces_list, "comma list of M values (needs --dataset)");
    sweep->add_option("--out", sweep_out, "CSV of all rows")->required();
    sweep->add_option("--pareto-out", sweep_pareto_out, "CSV of Pareto rows (default: <out>.pareto.csv)");
    sweep->add_flag("--parallel", sweep_parallel, "run each batch across worker threads");
    sweep_opts.attach(sweep, false);
    sweep_build.attach(sweep, false);

    // theory
    auto* theory = app.add_subcommand("theory", "Hoeffding recall bound report");
    std::string theory_m = "16", theory_p = "0.5", theory_tau = "4", theory_out;
    std::size_t theory_trials = 100000;
    std::uint64_t theory_seed = 42;
    theory->add_option("--m", theory_m, "subspace count(s), comma list");
    theory->add_option("--p-star", theory_p, "collision probability(ies), comma list");
    theory->add_option("--tau", theory_tau, "threshold(s), comma list");
    theory->add_option("--trials", theory_trials, "Monte Carlo trials");
    theory->add_option("--seed", theory_seed, "RNG seed");
    theory->add_option("--out", theory_out, "CSV path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth) {
            const auto data = crisp::synthetic::generate(synth_kind, synth_n, synth_d, synth_seed, synth_rank);
            crisp::save_fvecs(data, synth_out);
            json status = {{"command", "synth"}, {"kind", synth_kind}, {"n", data.n}, {"d", data.d},
                           {"seed", synth_seed}};
            if (synth_queries > 0) {
                if (synth_queries_out.empty()) throw crisp::ArgumentError("--num-queries needs --queries-out");
                const auto queries =
                    crisp::synthetic::perturbed_queries(data, synth_queries, synth_sigma, synth_seed + 1);
                crisp::save_fvecs(queries, synth_queries_out);
                status["queries"] = queries.n;
            }
            std::cout << status.dump() << '\n';
        } else if (*gt_cmd) {
            const auto data = crisp::load_fvecs(gt_dataset);
            const auto queries = crisp::load_fvecs(gt_queries);
            const auto start = Clock::now();
            const auto gt = crisp::brute_force_knn(data, queries, gt_k);
            crisp::save_ivecs(gt, gt_out);
            std::cout << json{{"command", "groundtruth"}, {"queries", gt.q}, {"k", gt.k},
                              {"seconds", seconds_since(start)}}.dump()
                      << '\n';
        } else if (*build) {
            auto data = crisp::load_fvecs(build_dataset);
            std::cerr << "building index over " << data.n << " x " << data.d << " vectors, M="
                      << build_opts.subspaces << " K=" << build_opts.centroids << '\n';
            const auto built = timed_build(std::move(data), build_opts.params(build_opts.subspaces));
            crisp::save_index(built.index, build_out);
            std::cout << json{{"cev", built.index.rotation.cev},
                              {"rotated", built.index.rotation.applied},
                              {"build_seconds", built.seconds},
                              {"logical_bytes", crisp::index_logical_bytes(built.index)},
                              {"n", built.index.n},
                              {"d", built.index.d},
                              {"padded_d", built.index.padded_d},
                              {"subspaces", built.index.subspaces()},
                              {"centroids", built.index.centroids()},
                              {"seed", build_opts.seed}}
                             .dump()
                      << '\n';
        } else if (*search) {
            const auto cfg = search_opts.resolve();
            cfg.validate();
            const auto index = crisp::load_index(search_index);
            const auto queries = crisp::load_fvecs(search_queries);
            std::optional<crisp::GroundTruth> gt;
            if (!search_gt.empty()) gt = crisp::load_ivecs(search_gt);
            const auto run = crisp::run_benchmark(index, queries, gt ? &*gt : nullptr, cfg, search_parallel);
            if (!search_out.empty()) crisp::save_ivecs(results_to_ivecs(run.results, cfg.k), search_out);
            json status = {{"command", "search"},
                           {"config", config_json(cfg)},
                           {"queries", queries.n},
                           {"qps", run.report.qps},
                           {"qps_mode", search_parallel ? "parallel" : "serial"},
                           {"mean_latency_ms", run.report.mean_latency_ms},
                           {"median_latency_ms", run.report.median_latency_ms},
                           {"mean_candidates", run.report.mean_candidates},
                           {"mean_verified", run.report.mean_verified},
                           {"seed", index.rotation.seed}};
            if (gt) status["recall"] = run.report.recall;
            std::cout << status.dump() << '\n';
        } else if (*sweep) {
            const auto base = sweep_opts.resolve();
            const auto budgets = parse_list<double>(sweep_budgets, "--budget-ratios");
            const auto collisions = parse_list<double>(sweep_collisions, "--min-collision-ratios");
            std::vector<crisp::SearchMode> modes;
            for (const auto& m : split_list(sweep_modes)) modes.push_back(crisp::parse_mode(m));
            if (budgets.empty() || collisions.empty() || modes.empty()) {
                throw crisp::ArgumentError("sweep grid is empty");
            }
            const auto queries = crisp::load_fvecs(sweep_queries);
            const auto gt = crisp::load_ivecs(sweep_gt);

            std::vector<Built> indexes;
            if (!sweep_subspaces_list.empty()) {
                if (sweep_dataset.empty()) throw crisp::ArgumentError("--subspaces-list needs --dataset");
                const auto data = crisp::load_fvecs(sweep_dataset);
                for (std::size_t m : parse_list<std::size_t>(sweep_subspaces_list, "--subspaces-list")) {
                    std::cerr << "building M=" << m << '\n';
                    indexes.push_back(timed_build(data, sweep_build.params(m)));
                }
            } else if (!sweep_index.empty()) {
                indexes.push_back({crisp::load_index(sweep_index), 0.0});
            } else if (!sweep_dataset.empty() && sweep_build.subspaces > 0) {
                indexes.push_back(timed_build(crisp::load_fvecs(sweep_dataset), sweep_build.params(sweep_build.subspaces)));
            } else {
                throw crisp::ArgumentError("sweep needs --index, or --dataset with --subspaces/--subspaces-list");
            }
            if (indexes.empty()) throw crisp::ArgumentError("sweep grid is empty");

            std::vector<crisp::BenchReport> rows;
            for (const auto& built : indexes) {
                for (auto mode : modes) {
                    for (double budget : budgets) {
                        for (double collision : collisions) {
                            auto cfg = base;
                            cfg.mode = mode;
                            cfg.budget_ratio = budget;
                            cfg.min_collision_ratio = collision;
                            auto run = crisp::run_benchmark(built.index, queries, &gt, cfg, sweep_parallel);
                            run.report.build_seconds = built.seconds;
                            std::cerr << crisp::to_string(mode) << " M=" << built.index.subspaces()
                                      << " budget=" << budget << " collision=" << collision
                                      << " recall=" << run.report.recall << " qps=" << run.report.qps << '\n';
                            rows.push_back(run.report);
                        }
                    }
                }
            }
            const auto front = crisp::pareto_front(rows);
            auto write_csv = [](const std::string& path, const std::vector<crisp::BenchReport>& data) {
                std::ofstream out(path, std::ios::trunc);
                if (!out) throw crisp::IoError("cannot open for writing: " + path);
                crisp::write_bench_csv_header(out);
                for (const auto& r : data) crisp::write_bench_csv_row(out, r);
                if (!out) throw crisp::IoError("write failed: " + path);
            };
            const std::string pareto_path = sweep_pareto_out.empty() ? sweep_out + ".pareto.csv" : sweep_pareto_out;
            write_csv(sweep_out, rows);
            write_csv(pareto_path, front);
            std::cout << json{{"command", "sweep"}, {"rows", rows.size()}, {"pareto_rows", front.size()},
                              {"out", sweep_out}, {"pareto_out", pareto_path}}.dump()
                      << '\n';
        } else if (*theory) {
            const auto ms = parse_list<std::size_t>(theory_m, "--m");
            const auto ps = parse_list<double>(theory_p, "--p-star");
            const auto taus = parse_list<double>(theory_tau, "--tau");
            if (ms.empty() || ps.empty() || taus.empty()) throw crisp::ArgumentError("theory grid is empty");
            std::ofstream file;
            if (!theory_out.empty()) {
                file.open(theory_out, std::ios::trunc);
                if (!file) throw crisp::IoError("cannot open for writing: " + theory_out);
            }
            std::ostream& out = theory_out.empty() ? std::cout : file;
            out << "m,p_star,tau,exact_failure,hoeffding_bound,simulated_failure\n";
            out.precision(10);
            for (std::size_t m : ms) {
                for (double p : ps) {
                    for (double tau : taus) {
                        const auto row = crisp::theory_row(m, p, tau, theory_trials, theory_seed);
                        out << row.m << ',' << row.p_star << ',' << row.tau << ',' << row.exact_failure << ',';
                        if (row.recall_bound) {
                            out << *row.recall_bound;
                        } else {
                            out << "vacuous";
                        }
                        out << ',' << row.simulated_failure << '\n';
                    }
                }
            }
            if (!out) throw crisp::IoError("write failed");
        }
    } catch (const crisp::ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const crisp::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const crisp::FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: config: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
