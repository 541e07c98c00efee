// Copyright 2026 The gpx Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef GPX_TYPES_HPP
#define GPX_TYPES_HPP

#include <array>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace gpx {

// +inf is the extended-real sentinel for kernel values. A kernel entry of
// kInf means "different independence blocks", never an overflow.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double x) noexcept { return x == kInf; }

using Vec3 = std::array<double, 3>;

// A site is a real coordinate (time, grid label) or a point on the unit
// sphere.
using Site = std::variant<double, Vec3>;

std::string to_string(const Site& s);

// Convenience for the common real-grid case.
std::vector<Site> make_sites(const std::vector<double>& grid);

}  // namespace gpx

#endif  // GPX_TYPES_HPP
