#ifndef LRI_CANONICAL_JSON_HPP
#define LRI_CANONICAL_JSON_HPP

#include <string>

#include "json.hpp"

namespace lri {

// %.17g, "-0" -> "0", non-finite values as the strings "inf", "-inf", "nan".
std::string format_number(double v);

// Insertion-ordered keys, two-space indent, trailing newline.
std::string canonical_dump(const nlohmann::ordered_json& value);

}  // namespace lri

#endif  // LRI_CANONICAL_JSON_HPP
