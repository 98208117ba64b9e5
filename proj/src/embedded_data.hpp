#pragma once

#include <string_view>

namespace slr::detail {

/// Contents of a file from data/, compiled in. Throws std::out_of_range for
/// unknown names.
std::string_view embedded_file(std::string_view name);

}  // namespace slr::detail
