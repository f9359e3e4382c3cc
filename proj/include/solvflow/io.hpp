#pragma once

#include "solvflow/asymptotics.hpp"
#include "solvflow/construct.hpp"
#include "solvflow/core.hpp"
#include "solvflow/integrate.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace solvflow {

/// %.17g: round-trips every double.
std::string format_double(double v);

struct CsvColumns {
    bool margins = false;  // Omega margins (full system only)
    const std::vector<double>* phi = nullptr;
};

/// Columns s,x,y,z,w (or s,<c1>,<c2> for planar trajectories), then optional extras.
void write_trajectory_csv(std::ostream& os, const Trajectory& t, const SolvsolitonParams& params,
                          const CsvColumns& extra = {});

/// Reads the s,x,y,z,w columns of a trajectory CSV; other columns are ignored.
/// Throws ParseError with the offending line.
Trajectory read_trajectory_csv(std::istream& is);

void write_profile_csv(std::ostream& os, const MetricProfile& profile);

nlohmann::ordered_json to_json(const SolvsolitonParams& params);
nlohmann::ordered_json to_json(const LieAlgebraData& alg);
nlohmann::ordered_json to_json(const Preset& preset);
nlohmann::ordered_json to_json(const RateReport& report);
nlohmann::ordered_json to_json(const Event& event);

/// {"name": ..., "dim": n, "brackets": [[i, j, k, value], ...]} with 1-based
/// indices; [e_i, e_j] = value e_k.
LieAlgebraData algebra_from_json(const nlohmann::json& j);

/// A catalog name, or a path to an algebra JSON file.
Preset load_preset(const std::string& name_or_path);

}  // namespace solvflow
