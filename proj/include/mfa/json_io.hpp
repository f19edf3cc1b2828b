#pragma once

#include "mfa/model.hpp"

#include <json.hpp>

#include <initializer_list>
#include <string_view>

namespace mfa::io {

using Json = nlohmann::ordered_json;

inline constexpr int model_format_version = 1;

/// {"kind": "rbf", "params": {"sigma": 1.5}}
Json kernel_to_json(const KernelSpec& spec);
/// Accepts the object form above or a spec string such as "rbf:sigma=1.5".
KernelSpec kernel_from_json(const Json& j);

/// Provenance without any timing, safe for byte-for-byte comparisons.
Json provenance_to_json(const Provenance& p);

/// The meta.json body of a saved model.
Json model_metadata(const CausalModel& model);

/// Throws ValidationError when obj has a key outside `allowed`.
void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view context);

}  // namespace mfa::io
