#include "spatialqa/geometry/units.hpp"

#include <array>
#include <utility>

#include "spatialqa/common/errors.hpp"
#include "spatialqa/common/text.hpp"

namespace spatialqa::geometry {

double centimeters_per(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::Meter: return 100.0;
        case LengthUnit::Centimeter: return 1.0;
        case LengthUnit::Millimeter: return 0.1;
        case LengthUnit::Inch: return 2.54;
        case LengthUnit::Foot: return 30.48;
    }
    throw UnitError("unknown length unit");
}

std::optional<LengthUnit> parse_length_unit(std::string_view text) {
    static const std::array<std::pair<std::string_view, LengthUnit>, 21> kNames = {{
        {"m", LengthUnit::Meter},          {"meter", LengthUnit::Meter},
        {"meters", LengthUnit::Meter},     {"metre", LengthUnit::Meter},
        {"metres", LengthUnit::Meter},     {"cm", LengthUnit::Centimeter},
        {"centimeter", LengthUnit::Centimeter}, {"centimeters", LengthUnit::Centimeter},
        {"centimetre", LengthUnit::Centimeter}, {"centimetres", LengthUnit::Centimeter},
        {"mm", LengthUnit::Millimeter},    {"millimeter", LengthUnit::Millimeter},
        {"millimeters", LengthUnit::Millimeter}, {"in", LengthUnit::Inch},
        {"inch", LengthUnit::Inch},        {"inches", LengthUnit::Inch},
        {"ft", LengthUnit::Foot},          {"foot", LengthUnit::Foot},
        {"feet", LengthUnit::Foot},        {"millimetre", LengthUnit::Millimeter},
        {"millimetres", LengthUnit::Millimeter},
    }};
    std::string key = to_lower(trim(text));
    if (!key.empty() && key.back() == '.') key.pop_back();
    for (const auto& [name, unit] : kNames) {
        if (key == name) return unit;
    }
    return std::nullopt;
}

LengthUnit length_unit_from(std::string_view text) {
    if (auto u = parse_length_unit(text)) return *u;
    throw UnitError("unknown length unit '" + std::string(text) + "'");
}

std::string_view unit_symbol(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::Meter: return "m";
        case LengthUnit::Centimeter: return "cm";
        case LengthUnit::Millimeter: return "mm";
        case LengthUnit::Inch: return "in";
        case LengthUnit::Foot: return "ft";
    }
    return "?";
}

std::string_view unit_plural(LengthUnit unit) {
    switch (unit) {
        case LengthUnit::Meter: return "meters";
        case LengthUnit::Centimeter: return "centimeters";
        case LengthUnit::Millimeter: return "millimeters";
        case LengthUnit::Inch: return "inches";
        case LengthUnit::Foot: return "feet";
    }
    return "?";
}

double convert_length_to_cm(double value, LengthUnit unit) {
    return value * centimeters_per(unit);
}

double convert_length_to_cm(double value, std::string_view unit) {
    return convert_length_to_cm(value, length_unit_from(unit));
}

}  // namespace spatialqa::geometry
