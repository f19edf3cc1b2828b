#include "mfa/json_io.hpp"

#include "mfa/error.hpp"
#include "mfa/kernels.hpp"

#include <algorithm>
#include <string>

namespace mfa::io {

Json kernel_to_json(const KernelSpec& spec) {
    Json params = Json::object();
    switch (spec.kind) {
        case KernelKind::linear: break;
        case KernelKind::polynomial_homogeneous:
        case KernelKind::polynomial_affine: params["d"] = spec.degree; break;
        case KernelKind::sigmoid:
            params["alpha"] = spec.alpha;
            params["beta"] = spec.beta;
            break;
        case KernelKind::rbf: params["sigma"] = spec.sigma; break;
    }
    Json j;
    j["kind"] = std::string(kernel_kind_name(spec.kind));
    j["params"] = std::move(params);
    return j;
}

KernelSpec kernel_from_json(const Json& j) {
    if (j.is_string()) return parse_kernel_spec(j.get<std::string>());
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string())
        throw ValidationError("kernel: expected a spec string or {\"kind\": ..., \"params\": {...}}");
    reject_unknown_keys(j, {"kind", "params"}, "kernel");
    KernelSpec spec;
    spec.kind = parse_kernel_kind(j["kind"].get<std::string>());
    if (j.contains("params")) {
        const Json& p = j["params"];
        if (!p.is_object()) throw ValidationError("kernel.params: expected an object");
        reject_unknown_keys(p, {"d", "degree", "alpha", "beta", "sigma"}, "kernel.params");
        auto number = [&](const char* key) {
            if (!p[key].is_number()) throw ValidationError(std::string("kernel.params.") + key + ": expected a number");
            return p[key].get<double>();
        };
        for (const char* key : {"d", "degree"}) {
            if (!p.contains(key)) continue;
            if (!p[key].is_number_integer())
                throw ValidationError(std::string("kernel.params.") + key + ": expected an integer");
            spec.degree = p[key].get<int>();
        }
        if (p.contains("alpha")) spec.alpha = number("alpha");
        if (p.contains("beta")) spec.beta = number("beta");
        if (p.contains("sigma")) spec.sigma = number("sigma");
    }
    validate(spec);
    return spec;
}

Json provenance_to_json(const Provenance& p) {
    Json j;
    j["algorithm"] = p.algorithm;
    j["schedule"] = std::string(to_string(p.schedule));
    j["engine"] = p.engine;
    j["iterations"] = p.iterations;
    j["final_cost"] = p.final_cost;
    j["converged"] = p.converged;
    j["cost_trace"] = p.cost_trace;
    j["warnings"] = p.warnings;
    return j;
}

Json model_metadata(const CausalModel& model) {
    Json meta;
    meta["format"] = "mfa-model";
    meta["version"] = model_format_version;
    meta["measurements"] = model.measurement_dim();
    meta["grid"] = model.grid();
    meta["ranks"] = model.ranks;
    meta["measurement_rank"] = model.measurement_basis ? model.measurement_basis->cols() : 0;
    Json kernels = Json::array();
    for (const auto& k : model.kernels) kernels.push_back(kernel_to_json(k));
    meta["kernels"] = std::move(kernels);
    meta["provenance"] = provenance_to_json(model.provenance);
    return meta;
}

void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context) {
    if (!obj.is_object()) throw ValidationError(std::string(context) + ": expected an object");
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ValidationError(std::string(context) + ": unknown key \"" + item.key() + "\"");
    }
}

}  // namespace mfa::io
