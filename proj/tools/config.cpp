#include "config.hpp"

#include "mfa/error.hpp"
#include "mfa/io.hpp"

namespace mfa::cli {

namespace {

std::string key_path(const std::string& context, std::string_view key) {
    return context.empty() ? std::string(key) : context + "." + std::string(key);
}

const Json& require(const Json& obj, std::string_view key, const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(key_path(context, key) + ": required");
    return *it;
}

std::size_t as_size(const Json& v, const std::string& field) {
    if (!v.is_number_unsigned()) throw ValidationError(field + ": expected a non-negative integer");
    return v.get<std::size_t>();
}

double as_double(const Json& v, const std::string& field) {
    if (!v.is_number()) throw ValidationError(field + ": expected a number");
    return v.get<double>();
}

bool as_bool(const Json& v, const std::string& field) {
    if (!v.is_boolean()) throw ValidationError(field + ": expected true or false");
    return v.get<bool>();
}

std::string as_string(const Json& v, const std::string& field) {
    if (!v.is_string()) throw ValidationError(field + ": expected a string");
    return v.get<std::string>();
}

Dims as_sizes(const Json& v, const std::string& field) {
    if (!v.is_array()) throw ValidationError(field + ": expected an array of non-negative integers");
    Dims out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_size(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

// Optional fields: assign only when present.
void opt_size(const Json& obj, const char* key, const std::string& ctx, std::size_t& out) {
    if (obj.contains(key)) out = as_size(obj[key], key_path(ctx, key));
}
void opt_double(const Json& obj, const char* key, const std::string& ctx, double& out) {
    if (obj.contains(key)) out = as_double(obj[key], key_path(ctx, key));
}
void opt_bool(const Json& obj, const char* key, const std::string& ctx, bool& out) {
    if (obj.contains(key)) out = as_bool(obj[key], key_path(ctx, key));
}
void opt_seed(const Json& obj, const char* key, const std::string& ctx, std::uint64_t& out) {
    if (obj.contains(key)) out = as_size(obj[key], key_path(ctx, key));
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

std::optional<fs::path> opt_path(const Json& obj, const char* key, const std::string& ctx, const fs::path& base) {
    if (!obj.contains(key)) return std::nullopt;
    return resolve(base, as_string(obj[key], key_path(ctx, key)));
}

Matrix as_matrix(const Json& v, const std::string& field) {
    if (!v.is_array() || v.empty() || !v[0].is_array())
        throw ValidationError(field + ": expected a non-empty array of rows");
    const auto rows = static_cast<Eigen::Index>(v.size());
    const auto cols = static_cast<Eigen::Index>(v[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json& row = v[static_cast<std::size_t>(i)];
        std::string rf = field + "[" + std::to_string(i) + "]";
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw ValidationError(rf + ": expected " + std::to_string(cols) + " entries");
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = as_double(row[static_cast<std::size_t>(k)], rf);
    }
    return m;
}

HebbianConfig parse_hebbian(const Json& j, const std::string& ctx) {
    io::reject_unknown_keys(j, {"eta", "epochs", "tol", "patience", "seed", "stochastic"}, ctx);
    HebbianConfig h;
    opt_double(j, "eta", ctx, h.eta);
    opt_size(j, "epochs", ctx, h.epochs);
    opt_double(j, "tol", ctx, h.tol);
    opt_size(j, "patience", ctx, h.patience);
    opt_seed(j, "seed", ctx, h.seed);
    opt_bool(j, "stochastic", ctx, h.stochastic);
    return h;
}

HierarchyOptions parse_hierarchy(const Json& j, const std::string& ctx) {
    io::reject_unknown_keys(j, {"leaf_size", "truncate_nodes", "rank_margin"}, ctx);
    HierarchyOptions h;
    opt_size(j, "leaf_size", ctx, h.leaf_size);
    opt_bool(j, "truncate_nodes", ctx, h.truncate_nodes);
    opt_size(j, "rank_margin", ctx, h.rank_margin);
    return h;
}

std::vector<KernelSpec> parse_kernels(const Json& j, const std::string& field) {
    if (!j.is_array()) throw ValidationError(field + ": expected an array with one kernel per causal mode");
    std::vector<KernelSpec> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            out.push_back(io::kernel_from_json(j[i]));
        } catch (const ValidationError& e) {
            throw ValidationError(field + "[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return out;
}

}  // namespace

Json read_json(const fs::path& path) {
    std::string text = io::read_text(path);
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(path.string() + ": malformed JSON: " + e.what());
    }
}

SynthSpec parse_synth_spec(const Json& j, const std::string& ctx) {
    io::reject_unknown_keys(j, {"measurements", "extents", "ranks", "noise", "warp", "seed", "regimes"}, ctx);
    SynthSpec spec;
    spec.measurements = as_size(require(j, "measurements", ctx), key_path(ctx, "measurements"));
    spec.extents = as_sizes(require(j, "extents", ctx), key_path(ctx, "extents"));
    spec.ranks = as_sizes(require(j, "ranks", ctx), key_path(ctx, "ranks"));
    opt_seed(j, "seed", ctx, spec.seed);
    opt_size(j, "regimes", ctx, spec.regimes);
    if (j.contains("warp")) {
        const Json& w = j["warp"];
        std::string field = key_path(ctx, "warp");
        if (!w.is_array()) throw ValidationError(field + ": expected an array of booleans");
        for (std::size_t i = 0; i < w.size(); ++i) spec.warp.push_back(as_bool(w[i], field + "[" + std::to_string(i) + "]"));
    }
    if (j.contains("noise")) {
        const Json& n = j["noise"];
        std::string nctx = key_path(ctx, "noise");
        io::reject_unknown_keys(n, {"kind", "scale", "relative", "rank", "covariances"}, nctx);
        if (n.contains("kind")) {
            std::string kind = as_string(n["kind"], key_path(nctx, "kind"));
            if (kind == "none") spec.noise.kind = NoiseKind::none;
            else if (kind == "simple") spec.noise.kind = NoiseKind::simple;
            else if (kind == "structured") spec.noise.kind = NoiseKind::structured;
            else throw ValidationError(key_path(nctx, "kind") + ": unknown value '" + kind +
                                       "' (expected none, simple or structured)");
        }
        opt_double(n, "scale", nctx, spec.noise.scale);
        opt_bool(n, "relative", nctx, spec.noise.relative);
        opt_size(n, "rank", nctx, spec.noise.rank);
        if (n.contains("covariances")) {
            const Json& c = n["covariances"];
            std::string field = key_path(nctx, "covariances");
            if (!c.is_array()) throw ValidationError(field + ": expected an array of matrices");
            for (std::size_t i = 0; i < c.size(); ++i)
                spec.noise.covariances.push_back(as_matrix(c[i], field + "[" + std::to_string(i) + "]"));
        }
    }
    validate(spec);
    return spec;
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "m-mode-svd" || name == "mpca") return Algorithm::m_mode_svd;
    if (name == "k-mpca") return Algorithm::k_mpca;
    if (name == "k-mica") return Algorithm::k_mica;
    if (name == "incremental-block" || name == "incremental-block-m-mode-svd") return Algorithm::incremental_block;
    if (name == "part-based" || name == "part-based-m-mode-svd") return Algorithm::part_based;
    throw ValidationError("algorithm: unknown value '" + std::string(name) +
                          "' (expected m-mode-svd, k-mpca, k-mica, incremental-block or part-based)");
}

std::string_view algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::m_mode_svd: return "m-mode-svd";
        case Algorithm::k_mpca: return "k-mpca";
        case Algorithm::k_mica: return "k-mica";
        case Algorithm::incremental_block: return "incremental-block";
        case Algorithm::part_based: return "part-based";
    }
    return "?";
}

TrainPlan parse_train_plan(const Json& j, const fs::path& base) {
    io::reject_unknown_keys(j,
                            {"input", "output", "algorithm", "ranks", "schedule", "max_iters", "tol", "lambda",
                             "engine", "hebbian", "factor_measurement_mode", "measurement_rank", "kernels", "ica",
                             "cache_covariance", "hierarchy", "segmentation", "core_method"},
                            "train");
    TrainPlan p;
    p.input = resolve(base, as_string(require(j, "input", ""), "input"));
    p.output = opt_path(j, "output", "", base);
    if (j.contains("algorithm")) p.algorithm = parse_algorithm(as_string(j["algorithm"], "algorithm"));
    TrainingConfig& cfg = p.training;
    cfg.ranks = as_sizes(require(j, "ranks", ""), "ranks");
    if (j.contains("schedule")) {
        const Json& s = j["schedule"];
        p.schedules.clear();
        if (s.is_array()) {
            if (s.empty()) throw ValidationError("schedule: expected at least one schedule");
            for (std::size_t i = 0; i < s.size(); ++i)
                p.schedules.push_back(parse_schedule(as_string(s[i], "schedule[" + std::to_string(i) + "]")));
        } else {
            p.schedules.push_back(parse_schedule(as_string(s, "schedule")));
        }
    }
    opt_size(j, "max_iters", "", cfg.max_iters);
    opt_double(j, "tol", "", cfg.tol);
    if (j.contains("lambda")) {
        const Json& l = j["lambda"];
        if (!l.is_array()) throw ValidationError("lambda: expected an array of numbers");
        for (std::size_t i = 0; i < l.size(); ++i) cfg.lambda.push_back(as_double(l[i], "lambda[" + std::to_string(i) + "]"));
    }
    if (j.contains("engine")) {
        std::string e = as_string(j["engine"], "engine");
        if (e == "svd") cfg.engine = SubspaceEngine::svd;
        else if (e == "hebbian") cfg.engine = SubspaceEngine::hebbian;
        else throw ValidationError("engine: unknown value '" + e + "' (expected svd or hebbian)");
    }
    if (j.contains("hebbian")) cfg.hebbian = parse_hebbian(j["hebbian"], "hebbian");
    opt_bool(j, "factor_measurement_mode", "", cfg.factor_measurement_mode);
    opt_size(j, "measurement_rank", "", cfg.measurement_rank);
    if (j.contains("kernels")) p.kernels = parse_kernels(j["kernels"], "kernels");
    if (j.contains("ica")) {
        const Json& ica = j["ica"];
        io::reject_unknown_keys(ica, {"max_sweeps", "tol", "seed"}, "ica");
        opt_size(ica, "max_sweeps", "ica", p.kernel_options.ica.max_sweeps);
        opt_double(ica, "tol", "ica", p.kernel_options.ica.tol);
        opt_seed(ica, "seed", "ica", p.kernel_options.ica.seed);
    }
    opt_bool(j, "cache_covariance", "", p.kernel_options.cache_covariance);
    if (j.contains("hierarchy")) p.hierarchy = parse_hierarchy(j["hierarchy"], "hierarchy");
    if (j.contains("segmentation")) {
        const Json& s = j["segmentation"];
        io::reject_unknown_keys(s, {"file", "permutation"}, "segmentation");
        p.segmentation = resolve(base, as_string(require(s, "file", "segmentation"), "segmentation.file"));
        if (auto perm = opt_path(s, "permutation", "segmentation", base)) p.permutation = *perm;
    }
    if (j.contains("core_method")) {
        std::string c = as_string(j["core_method"], "core_method");
        if (c == "direct") p.core_method = CoreMethod::direct;
        else if (c == "autoencoder" || c == "tensor-autoencoder") p.core_method = CoreMethod::tensor_autoencoder;
        else throw ValidationError("core_method: unknown value '" + c + "' (expected direct or autoencoder)");
    }
    return p;
}

Rank1Method parse_rank1_method(std::string_view name) {
    if (name == "als-cp" || name == "cp") return Rank1Method::als_cp;
    if (name == "m-mode-svd") return Rank1Method::m_mode_svd_leading;
    throw ValidationError("method: unknown value '" + std::string(name) + "' (expected als-cp or m-mode-svd)");
}

ProjectPlan parse_project_plan(const Json& j, const fs::path& base) {
    io::reject_unknown_keys(j, {"model", "ensemble", "observations", "output", "method", "max_iters", "tol"},
                            "project");
    ProjectPlan p;
    p.model = opt_path(j, "model", "", base);
    p.ensemble = opt_path(j, "ensemble", "", base);
    p.observations = opt_path(j, "observations", "", base);
    p.output = opt_path(j, "output", "", base);
    if (j.contains("method")) p.rank1.method = parse_rank1_method(as_string(j["method"], "method"));
    opt_size(j, "max_iters", "", p.rank1.max_iters);
    opt_double(j, "tol", "", p.rank1.tol);
    return p;
}

std::vector<fs::path> read_ensemble_manifest(const fs::path& path) {
    Json j = read_json(path);
    io::reject_unknown_keys(j, {"models"}, "ensemble");
    const Json& models = require(j, "models", "ensemble");
    if (!models.is_array() || models.empty()) throw ValidationError("ensemble.models: expected a non-empty array");
    std::vector<fs::path> out;
    for (std::size_t i = 0; i < models.size(); ++i)
        out.push_back(resolve(path.parent_path(), as_string(models[i], "ensemble.models[" + std::to_string(i) + "]")));
    return out;
}

BenchPlan parse_bench_plan(const Json& j, const fs::path& base) {
    io::reject_unknown_keys(j, {"cases", "output"}, "bench");
    BenchPlan plan;
    plan.output = opt_path(j, "output", "", base);
    const Json& cases = require(j, "cases", "");
    if (!cases.is_array()) throw ValidationError("cases: expected an array");
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const Json& c = cases[i];
        std::string ctx = "cases[" + std::to_string(i) + "]";
        io::reject_unknown_keys(c, {"name", "input", "synth", "ranks", "max_iters", "tol", "hierarchy"}, ctx);
        BenchCase bc;
        bc.name = c.contains("name") ? as_string(c["name"], key_path(ctx, "name")) : "case" + std::to_string(i);
        if (bc.name.find_first_of(",\"\n") != std::string::npos)
            throw ValidationError(key_path(ctx, "name") + ": must not contain commas, quotes or newlines");
        bc.input = opt_path(c, "input", ctx, base);
        if (c.contains("synth")) bc.synth = parse_synth_spec(c["synth"], key_path(ctx, "synth"));
        if (bc.input.has_value() == bc.synth.has_value())
            throw ValidationError(ctx + ": give exactly one of input or synth");
        if (c.contains("ranks")) bc.ranks = as_sizes(c["ranks"], key_path(ctx, "ranks"));
        else if (bc.synth) bc.ranks = bc.synth->ranks;
        else throw ValidationError(key_path(ctx, "ranks") + ": required");
        opt_size(c, "max_iters", ctx, bc.max_iters);
        opt_double(c, "tol", ctx, bc.tol);
        if (c.contains("hierarchy")) bc.hierarchy = parse_hierarchy(c["hierarchy"], key_path(ctx, "hierarchy"));
        plan.cases.push_back(std::move(bc));
    }
    return plan;
}

}  // namespace mfa::cli
