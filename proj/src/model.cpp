#include "mfa/model.hpp"

#include "mfa/error.hpp"

namespace mfa {

std::string_view to_string(Schedule s) {
    switch (s) {
        case Schedule::sequential: return "sequential";
        case Schedule::parallel: return "parallel";
        case Schedule::asynchronous: return "async";
    }
    return "sequential";
}

Schedule parse_schedule(std::string_view name) {
    if (name == "sequential") return Schedule::sequential;
    if (name == "parallel") return Schedule::parallel;
    if (name == "async" || name == "asynchronous") return Schedule::asynchronous;
    throw ValidationError("schedule: unknown value '" + std::string(name) +
                          "' (expected sequential, parallel or async)");
}

Dims CausalModel::grid() const {
    Dims g;
    for (const auto& f : factors) g.push_back(static_cast<std::size_t>(f.rows()));
    return g;
}

}  // namespace mfa
