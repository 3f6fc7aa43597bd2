#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "obsim/distinguisher.hpp"
#include "obsim/reduction.hpp"

namespace obsim {

/// CSV with header t,<b>_x,<b>_y,<b>_z,<b>_vx,<b>_vy,<b>_vz per movable body
/// and every value printed with 17 significant digits.
void write_csv(std::ostream& out, const Trajectory& traj);
std::string to_csv(const Trajectory& traj);
Trajectory parse_csv(std::string_view text);
Trajectory read_csv(const std::filesystem::path& path);

inline constexpr std::string_view kModelFormat = "obsim-reduced-model";
inline constexpr int kModelVersion = 1;

/// Versioned JSON artifact; doubles round-trip exactly.
std::string model_to_json(const ReducedModel& model);
ReducedModel model_from_json(std::string_view text);

std::string report_to_json(const DistinguisherReport& report, int indent = 2);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace obsim
