#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace spatialqa::geometry {

enum class LengthUnit { Meter, Centimeter, Millimeter, Inch, Foot };

/// Exact centimeters per unit: m 100, cm 1, mm 0.1, in 2.54, ft 30.48.
double centimeters_per(LengthUnit unit);

/// Accepts abbreviations and singular/plural names ("m", "meters", "feet", ...),
/// case-insensitive. Returns nullopt for anything else.
std::optional<LengthUnit> parse_length_unit(std::string_view text);
/// Like parse_length_unit but throws UnitError.
LengthUnit length_unit_from(std::string_view text);

std::string_view unit_symbol(LengthUnit unit);  // "m", "cm", ...
std::string_view unit_plural(LengthUnit unit);  // "meters", ...

double convert_length_to_cm(double value, LengthUnit unit);
double convert_length_to_cm(double value, std::string_view unit);

}  // namespace spatialqa::geometry
