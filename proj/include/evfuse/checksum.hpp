#pragma once

#include <string>
#include <string_view>

namespace evfuse {

// Lower-case hex SHA-256.
std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::string& path);

}  // namespace evfuse
