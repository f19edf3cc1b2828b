#include "mfa/model_io.hpp"

#include "mfa/error.hpp"
#include "mfa/io.hpp"
#include "mfa/json_io.hpp"

#include <string>

namespace mfa::io {

namespace fs = std::filesystem;

namespace {

fs::path factor_path(const fs::path& dir, std::size_t mode) {
    return dir / ("factor_" + std::to_string(mode) + ".csv");
}

template <class T>
T field(const Json& meta, const char* key, const fs::path& file) {
    if (!meta.contains(key)) throw IoError(file.string() + ": missing \"" + key + "\"");
    try {
        return meta[key].get<T>();
    } catch (const nlohmann::json::exception&) {
        throw IoError(file.string() + ": \"" + key + "\" has the wrong type");
    }
}

}  // namespace

void save_model(const CausalModel& model, const fs::path& dir) {
    const std::size_t modes = model.factor_count();
    if (model.core.order() != modes + 1 || model.ranks.size() != modes ||
        static_cast<std::size_t>(model.mean.size()) != model.measurement_dim())
        throw ValidationError("save_model: model parts are inconsistent");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir.string() + ": cannot create directory: " + ec.message());

    write_tensor(dir / "core.mten", model.core);
    for (std::size_t m = 0; m < modes; ++m) write_matrix_csv(factor_path(dir, m + 1), model.factors[m]);
    if (model.measurement_basis) write_matrix_csv(factor_path(dir, 0), *model.measurement_basis);
    write_matrix_csv(dir / "mean.csv", Matrix(model.mean));

    write_text(dir / "meta.json", model_metadata(model).dump(2) + "\n");
}

CausalModel load_model(const fs::path& dir) {
    const fs::path meta_path = dir / "meta.json";
    Json meta;
    try {
        meta = Json::parse(read_text(meta_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw IoError(meta_path.string() + ": " + e.what());
    }
    if (!meta.is_object() || meta.value("format", "") != "mfa-model")
        throw IoError(meta_path.string() + ": not a model description");
    if (field<int>(meta, "version", meta_path) != model_format_version)
        throw IoError(meta_path.string() + ": unsupported version");

    CausalModel model;
    model.ranks = field<Dims>(meta, "ranks", meta_path);
    const auto grid = field<Dims>(meta, "grid", meta_path);
    const auto measurements = field<std::size_t>(meta, "measurements", meta_path);
    const auto measurement_rank = field<std::size_t>(meta, "measurement_rank", meta_path);
    const std::size_t modes = model.ranks.size();
    if (grid.size() != modes) throw IoError(meta_path.string() + ": grid and ranks differ in length");

    model.core = read_tensor(dir / "core.mten");
    Dims expected{measurements};
    expected.insert(expected.end(), model.ranks.begin(), model.ranks.end());
    if (model.core.dims() != expected) throw IoError((dir / "core.mten").string() + ": shape does not match meta.json");
    for (std::size_t m = 0; m < modes; ++m) {
        Matrix u = read_matrix_csv(factor_path(dir, m + 1));
        if (static_cast<std::size_t>(u.rows()) != grid[m] || static_cast<std::size_t>(u.cols()) != model.ranks[m])
            throw IoError(factor_path(dir, m + 1).string() + ": shape does not match meta.json");
        model.factors.push_back(std::move(u));
    }
    if (measurement_rank > 0) {
        Matrix b = read_matrix_csv(factor_path(dir, 0));
        if (static_cast<std::size_t>(b.rows()) != measurements || static_cast<std::size_t>(b.cols()) != measurement_rank)
            throw IoError(factor_path(dir, 0).string() + ": shape does not match meta.json");
        model.measurement_basis = std::move(b);
    }
    Matrix mean = read_matrix_csv(dir / "mean.csv");
    if (mean.cols() != 1 || static_cast<std::size_t>(mean.rows()) != measurements)
        throw IoError((dir / "mean.csv").string() + ": expected a " + std::to_string(measurements) + "x1 column");
    model.mean = mean.col(0);

    const Json kernels = field<Json>(meta, "kernels", meta_path);
    if (!kernels.is_array() || kernels.size() != modes)
        throw IoError(meta_path.string() + ": expected one kernel per causal mode");
    try {
        for (const auto& k : kernels) model.kernels.push_back(kernel_from_json(k));
    } catch (const ValidationError& e) {
        throw IoError(meta_path.string() + ": " + e.what());
    }

    const Json prov = field<Json>(meta, "provenance", meta_path);
    if (!prov.is_object()) throw IoError(meta_path.string() + ": provenance must be an object");
    Provenance& p = model.provenance;
    p.algorithm = field<std::string>(prov, "algorithm", meta_path);
    try {
        p.schedule = parse_schedule(field<std::string>(prov, "schedule", meta_path));
    } catch (const ValidationError& e) {
        throw IoError(meta_path.string() + ": " + e.what());
    }
    p.engine = field<std::string>(prov, "engine", meta_path);
    p.iterations = field<std::size_t>(prov, "iterations", meta_path);
    p.final_cost = field<double>(prov, "final_cost", meta_path);
    p.converged = field<bool>(prov, "converged", meta_path);
    p.cost_trace = field<std::vector<double>>(prov, "cost_trace", meta_path);
    p.warnings = field<std::vector<std::string>>(prov, "warnings", meta_path);
    return model;
}

}  // namespace mfa::io
