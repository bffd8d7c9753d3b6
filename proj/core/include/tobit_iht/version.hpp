#pragma once

#include <string_view>

namespace tobit {

/// Library version, recorded in run manifests.
std::string_view version() noexcept;

}  // namespace tobit
