#pragma once

// Report assembly for the command-line tool. Reports are JsonValue trees with
// a fixed key order; sample-dependent content is a pure function of the
// spec, the data and the seed.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "identrank/identcore.hpp"
#include "identrank/json_out.hpp"
#include "identrank/specfile.hpp"

namespace identrank {

inline constexpr const char *kArtifactName = "identrank";
inline constexpr const char *kArtifactVersion = "0.1.0";

JsonValue to_json(const RankDecision &rd);

// Parameter subsets are reported 1-based together with their names.
JsonValue subset_json(const SubsetResult &subset, const std::vector<std::string> &names);

struct AnalyzeOptions {
    std::optional<std::filesystem::path> data; // overrides the spec's data file
    bool timing = false;                       // adds wall_clock_s (breaks byte-stability)
};

JsonValue analyze(const ModelSpec &spec, const AnalyzeOptions &options = {});

JsonValue ridge_point_json(const RidgePoint &pt);

} // namespace identrank
