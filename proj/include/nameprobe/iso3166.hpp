#pragma once

#include <span>
#include <string_view>

namespace nameprobe::iso3166 {

// Sorted list of the officially assigned ISO 3166-1 alpha-3 codes.
std::span<const std::string_view> alpha3_codes();

bool is_assigned_alpha3(std::string_view code);

}  // namespace nameprobe::iso3166
