#include "tobit_iht/version.hpp"

namespace tobit {

std::string_view version() noexcept { return TOBIT_IHT_VERSION; }

}  // namespace tobit
