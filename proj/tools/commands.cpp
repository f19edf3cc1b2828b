#include "commands.hpp"

#include "config.hpp"

#include "mfa/error.hpp"
#include "mfa/io.hpp"
#include "mfa/linalg.hpp"
#include "mfa/model_io.hpp"

#include <chrono>
#include <iostream>
#include <sstream>

namespace mfa::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path require_out(const Options& opts, const std::optional<fs::path>& from_config) {
    if (!opts.out.empty()) return opts.out;
    if (from_config) return *from_config;
    throw ValidationError("out: an output directory is required (--out or \"output\")");
}

Json require_config(const Options& opts) {
    if (opts.config.empty()) throw ValidationError("config: --config is required");
    return read_json(opts.config);
}

fs::path config_dir(const Options& opts) { return fs::path(opts.config).parent_path(); }

void make_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());
}

void write_json(const fs::path& path, const Json& j) { io::write_text(path, j.dump(2) + "\n"); }

void write_dataset(const SynthDataset& ds, const fs::path& dir) {
    make_dir(dir);
    io::write_tensor(dir / "data.mten", ds.data);
    io::write_tensor(dir / "noise.mten", ds.noise);
    io::save_model(ds.truth, dir / "truth");
}

// "m=spec" with m a causal mode 1..M.
void apply_kernel_flag(const std::string& flag, std::size_t modes, std::vector<KernelSpec>& kernels) {
    auto eq = flag.find('=');
    std::size_t mode = 0;
    bool ok = eq != std::string::npos && eq > 0;
    for (std::size_t i = 0; ok && i < eq; ++i) ok = std::isdigit(static_cast<unsigned char>(flag[i])) != 0;
    if (ok) mode = std::stoul(flag.substr(0, eq));
    if (!ok || mode == 0 || mode > modes)
        throw ValidationError("--kernel: expected m=spec with m in 1.." + std::to_string(modes) + ", got '" + flag + "'");
    if (kernels.empty()) kernels.assign(modes, KernelSpec{});
    if (kernels.size() != modes)
        throw ValidationError("kernels: expected " + std::to_string(modes) + " entries, got " +
                              std::to_string(kernels.size()));
    kernels[mode - 1] = parse_kernel_spec(flag.substr(eq + 1));
}

CausalModel train_once(const Tensor& d, const TrainPlan& plan, Schedule schedule, const PartSegmentation* seg) {
    TrainingConfig cfg = plan.training;
    cfg.schedule = schedule;
    CausalModel model;
    switch (plan.algorithm) {
        case Algorithm::m_mode_svd: model = m_mode_svd(d, cfg); break;
        case Algorithm::k_mpca:
        case Algorithm::k_mica: {
            KernelTrainingOptions ko = plan.kernel_options;
            ko.analysis = plan.algorithm == Algorithm::k_mica ? ComponentAnalysis::ica : ComponentAnalysis::pca;
            model = k_mpca(d, cfg, plan.kernels, ko);
            break;
        }
        case Algorithm::incremental_block: model = incremental_block_m_mode_svd(d, cfg, plan.hierarchy); break;
        case Algorithm::part_based: model = part_based_m_mode_svd(d, cfg, *seg, plan.hierarchy); break;
    }
    if (plan.core_method == CoreMethod::tensor_autoencoder) {
        Centered c = center_observations(d);
        model.core = compute_extended_core(c.data, model.factors, CoreMethod::tensor_autoencoder, cfg.hebbian);
        model.provenance.final_cost = cost_evaluate(d, model, cfg.lambda);
    }
    return model;
}

Json merge_trace_json(const MergeTrace& t, std::size_t mode) {
    Json j;
    j["mode"] = mode;
    j["leaves"] = t.leaves;
    j["depth"] = t.depth;
    Json nodes = Json::array();
    for (const auto& n : t.nodes) nodes.push_back({{"level", n.level}, {"rows", n.rows}, {"cols", n.cols}, {"rank", n.rank}});
    j["nodes"] = std::move(nodes);
    return j;
}

Json projection_json(const ProjectionResult& r) {
    Json j;
    j["degenerate"] = r.degenerate;
    j["scale"] = r.scale;
    j["residual"] = r.residual;
    Json labels = Json::array();
    for (std::size_t m = 0; m < r.labels.size(); ++m)
        labels.push_back({{"mode", m + 1}, {"index", r.labels[m].index}, {"cosine", r.labels[m].cosine}});
    j["labels"] = std::move(labels);
    Json reps = Json::array();
    for (const auto& v : r.reps) reps.push_back(std::vector<double>(v.data(), v.data() + v.size()));
    j["reps"] = std::move(reps);
    j["rank1_iterations"] = r.rank1_iterations;
    j["rank1_converged"] = r.rank1_converged;
    return j;
}

}  // namespace

int cmd_synth(const Options& opts) {
    SynthSpec spec = parse_synth_spec(require_config(opts), "");
    if (opts.seed) spec.seed = *opts.seed;
    const fs::path out = require_out(opts, std::nullopt);
    make_dir(out);
    if (spec.regimes == 1) {
        write_dataset(generate(spec), out);
        return exit_ok;
    }
    auto regimes = generate_regimes(spec);
    Json manifest;
    manifest["models"] = Json::array();
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        std::string name = "regime_" + std::to_string(r);
        write_dataset(regimes[r], out / name);
        manifest["models"].push_back(name + "/truth");
    }
    write_json(out / "ensemble.json", manifest);
    return exit_ok;
}

int cmd_train(const Options& opts) {
    TrainPlan plan = parse_train_plan(require_config(opts), config_dir(opts));
    if (!opts.schedule.empty()) plan.schedules = {parse_schedule(opts.schedule)};
    if (opts.engine == "svd") plan.training.engine = SubspaceEngine::svd;
    if (opts.engine == "hebbian") plan.training.engine = SubspaceEngine::hebbian;
    if (opts.seed) {
        plan.training.hebbian.seed = *opts.seed;
        plan.kernel_options.ica.seed = *opts.seed;
    }
    const fs::path out = require_out(opts, plan.output);
    Tensor d = io::read_tensor(plan.input);
    if (d.order() < 2) throw DimensionError("input: expected a tensor with at least one causal mode");
    const std::size_t modes = d.order() - 1;

    for (const auto& flag : opts.kernels) apply_kernel_flag(flag, modes, plan.kernels);
    if (!opts.kernels.empty() && plan.algorithm == Algorithm::m_mode_svd) plan.algorithm = Algorithm::k_mpca;
    if (!plan.kernels.empty() && plan.algorithm != Algorithm::k_mpca && plan.algorithm != Algorithm::k_mica)
        throw ValidationError("kernels: only used by the k-mpca and k-mica algorithms");
    if (plan.core_method == CoreMethod::tensor_autoencoder && plan.training.factor_measurement_mode)
        throw ValidationError("core_method: autoencoder cannot be combined with factor_measurement_mode");

    std::optional<PartSegmentation> seg;
    if (plan.algorithm == Algorithm::part_based) {
        if (plan.segmentation.empty()) throw ValidationError("segmentation.file: required by the part-based algorithm");
        seg = read_segmentation(plan.segmentation, plan.permutation, d.dims()[0]);
    }

    const auto start = Clock::now();
    std::vector<CausalModel> runs;
    Json per_schedule = Json::object();
    for (Schedule s : plan.schedules) {
        const auto t0 = Clock::now();
        runs.push_back(train_once(d, plan, s, seg ? &*seg : nullptr));
        per_schedule[std::string(to_string(s))] = seconds_since(t0);
    }
    const CausalModel& model = runs.front();

    make_dir(out);
    io::save_model(model, out / "model");

    Json report = io::provenance_to_json(model.provenance);
    report["ranks"] = plan.training.ranks;
    Json traces = Json::array();
    Json node_seconds = Json::array();
    for (std::size_t m = 0; m < model.provenance.merge_traces.size(); ++m) {
        const MergeTrace& t = model.provenance.merge_traces[m];
        traces.push_back(merge_trace_json(t, m + 1));
        Json secs = Json::array();
        for (const auto& n : t.nodes) secs.push_back(n.seconds);
        node_seconds.push_back(std::move(secs));
    }
    report["merge_traces"] = std::move(traces);
    Json run_list = Json::array();
    bool all_converged = true;
    for (const auto& r : runs) {
        Json j;
        j["schedule"] = std::string(to_string(r.provenance.schedule));
        j["iterations"] = r.provenance.iterations;
        j["final_cost"] = r.provenance.final_cost;
        j["converged"] = r.provenance.converged;
        j["cost_trace"] = r.provenance.cost_trace;
        run_list.push_back(std::move(j));
        all_converged = all_converged && r.provenance.converged;
    }
    report["runs"] = std::move(run_list);
    // Everything nondeterministic lives under "timing".
    Json timing;
    timing["seconds"] = seconds_since(start);
    timing["per_schedule"] = std::move(per_schedule);
    timing["merge_node_seconds"] = std::move(node_seconds);
    report["timing"] = std::move(timing);
    write_json(out / "report.json", report);

    if (!all_converged) {
        std::cerr << "mfa train: stopped at max_iters before the cost change fell below tol; "
                     "the best iterate was written\n";
        return exit_not_converged;
    }
    return exit_ok;
}

int cmd_project(const Options& opts) {
    ProjectPlan plan;
    if (!opts.config.empty()) plan = parse_project_plan(read_json(opts.config), config_dir(opts));
    if (!opts.model.empty()) plan.model = opts.model;
    if (!opts.ensemble.empty()) plan.ensemble = opts.ensemble;
    if (!opts.observations.empty()) plan.observations = opts.observations;
    if (!opts.method.empty()) plan.rank1.method = parse_rank1_method(opts.method);
    if (!opts.out.empty()) plan.output = opts.out;
    if (plan.model.has_value() == plan.ensemble.has_value())
        throw ValidationError("model: give exactly one of a model directory or an ensemble manifest");
    if (!plan.observations) throw ValidationError("observations: an observation CSV is required");

    Matrix obs = io::read_matrix_csv(*plan.observations);
    Json result;
    result["method"] = plan.rank1.method == Rank1Method::als_cp ? "als-cp" : "m-mode-svd";
    Json list = Json::array();
    if (plan.model) {
        CausalModel model = io::load_model(*plan.model);
        if (static_cast<std::size_t>(obs.rows()) != model.measurement_dim())
            throw DimensionError("observations: expected " + std::to_string(model.measurement_dim()) +
                                 " rows, got " + std::to_string(obs.rows()));
        MultilinearProjector projector(model);
        for (Eigen::Index c = 0; c < obs.cols(); ++c) list.push_back(projection_json(projector.project(obs.col(c), plan.rank1)));
    } else {
        PiecewiseEnsemble ensemble;
        for (const auto& dir : read_ensemble_manifest(*plan.ensemble)) ensemble.models.push_back(io::load_model(dir));
        for (Eigen::Index c = 0; c < obs.cols(); ++c) {
            PiecewiseResult pr = piecewise_project(ensemble, obs.col(c), plan.rank1);
            Json j;
            j["chosen"] = pr.chosen;
            j["scores"] = pr.scores;
            Json cands = Json::array();
            for (const auto& cand : pr.candidates) cands.push_back(projection_json(cand));
            j["candidates"] = std::move(cands);
            list.push_back(std::move(j));
        }
    }
    result["observations"] = std::move(list);
    if (plan.output) {
        make_dir(*plan.output);
        write_json(*plan.output / "projection.json", result);
    } else {
        std::cout << result.dump(2) << "\n";
    }
    return exit_ok;
}

int cmd_bench(const Options& opts) {
    BenchPlan plan = parse_bench_plan(require_config(opts), config_dir(opts));
    const fs::path out = require_out(opts, plan.output);
    std::ostringstream csv;
    csv << "case,path,mode,leaves,nodes,depth,max_principal_angle,wall_seconds\n";
    for (auto& bc : plan.cases) {
        if (bc.synth && opts.seed) bc.synth->seed = *opts.seed;
        Tensor d = bc.input ? io::read_tensor(*bc.input) : generate(*bc.synth).data;
        TrainingConfig cfg;
        cfg.ranks = bc.ranks;
        cfg.max_iters = bc.max_iters;
        cfg.tol = bc.tol;

        auto t0 = Clock::now();
        CausalModel flat = m_mode_svd(d, cfg);
        double flat_seconds = seconds_since(t0);
        t0 = Clock::now();
        CausalModel hier = incremental_block_m_mode_svd(d, cfg, bc.hierarchy);
        double hier_seconds = seconds_since(t0);

        csv << bc.name << ",flat,all,1,1,0,0," << io::format_double(flat_seconds) << "\n";
        std::size_t leaves = 0, nodes = 0, depth = 0;
        double worst = 0.0;
        for (std::size_t m = 0; m < hier.factor_count(); ++m) {
            const MergeTrace& t = hier.provenance.merge_traces[m];
            double angle = max_principal_angle(hier.factors[m], flat.factors[m]);
            double secs = 0.0;
            for (const auto& n : t.nodes) secs += n.seconds;
            csv << bc.name << ",hierarchy," << m + 1 << "," << t.leaves << "," << t.nodes.size() << "," << t.depth
                << "," << io::format_double(angle) << "," << io::format_double(secs) << "\n";
            leaves += t.leaves;
            nodes += t.nodes.size();
            depth = std::max(depth, t.depth);
            worst = std::max(worst, angle);
        }
        csv << bc.name << ",hierarchy,all," << leaves << "," << nodes << "," << depth << ","
            << io::format_double(worst) << "," << io::format_double(hier_seconds) << "\n";
    }
    make_dir(out);
    io::write_text(out / "bench.csv", csv.str());
    return exit_ok;
}

int cmd_inspect(const Options& opts) {
    std::string dir = opts.model;
    if (dir.empty() && !opts.config.empty()) {
        Json j = read_json(opts.config);
        io::reject_unknown_keys(j, {"model"}, "inspect");
        if (!j.contains("model") || !j["model"].is_string()) throw ValidationError("model: expected a directory path");
        dir = (config_dir(opts) / j["model"].get<std::string>()).string();
    }
    if (dir.empty()) throw ValidationError("model: --model is required");
    CausalModel model = io::load_model(dir);
    Json meta = io::model_metadata(model);
    meta["core_norm"] = model.core.norm();
    std::cout << meta.dump(2) << "\n";
    return exit_ok;
}

}  // namespace mfa::cli
