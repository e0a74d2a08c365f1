#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace krylov {

/// Shortest decimal representation that parses back to the same double.
std::string format_shortest(double value);

/// Parses a full token as a double; nullopt if the token is not a number.
std::optional<double> parse_double(std::string_view token);

}  // namespace krylov
