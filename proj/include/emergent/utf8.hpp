#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emergent::utf8 {

/// Decodes UTF-8; invalid bytes decode to U+FFFD.
std::u32string decode(std::string_view text);
std::string encode(std::u32string_view text);
void append(std::string& out, char32_t cp);

std::size_t length(std::string_view text);

}  // namespace emergent::utf8
