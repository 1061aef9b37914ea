#pragma once

// Model spec files (JSON) and data files (CSV) for the command-line tool.
//
// Spec layout:
//   {
//     "model": {"name": "armitage_doll", "stages": 4},     // or poisson_glm /
//              // linear_gaussian with "design": "<csv>", two_mutation,
//              // cond_demo, quartic with "p"
//     "family": {"kind": "poisson"},                       // normal needs "phi"
//     "data": "<csv>",                                     // optional
//     "param_box": {"rate_1": {"lower": 0.1, "upper": 2, "scale": "log"}},
//     "pinned_theta": [[...], ...],
//     "sampler": {"M": 64, "seed": 20100127, "include_corners": true},
//     "tolerances": {"tol_rel": 1e-8, "tol_abs": 1e-12},
//     "declared_factorization": {"N": 1}
//   }
// Relative paths are resolved against the directory of the spec file.
//
// Data CSV: header "x,z,y_1,...,y_m[,trials]", one observation per row.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "identrank/expfam.hpp"
#include "identrank/identcore.hpp"
#include "identrank/model.hpp"
#include "identrank/ranklab.hpp"

namespace identrank {

struct BoxOverride {
    std::string name;
    std::optional<double> lower;
    std::optional<double> upper;
    std::optional<Scale> scale;
};

struct ModelSpec {
    std::filesystem::path path;
    std::uint64_t hash = 0; // FNV-1a of the spec file bytes

    std::string model_name;
    std::size_t stages = 0;                         // armitage_doll
    std::size_t p = 0;                              // quartic
    std::optional<std::filesystem::path> design;    // glm models

    FamilyKind family = FamilyKind::Poisson;
    double phi = 1.0;

    std::optional<std::filesystem::path> data;
    std::vector<BoxOverride> box_overrides;
    SamplerConfig sampler;
    std::string seed_source = "default"; // "default", "spec" or "env"
    Tolerances tolerances;
    std::optional<std::size_t> declared_factorization;

    ExpFamily make_family() const;
};

// Throws InputError naming the file on any problem.
ModelSpec load_spec(const std::filesystem::path &path);

Dataset read_data_csv(const std::filesystem::path &path);

// Headerless rectangular CSV of reals; '#' lines are skipped.
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path &path);

using BuiltModel = std::variant<MeanModel, CustomLikelihoodModel>;

// Instantiates the zoo model, applies box overrides and the declared
// factorization count.
BuiltModel build_model(const ModelSpec &spec);

std::uint64_t fnv1a64(const std::string &bytes);
std::string hex64(std::uint64_t v);

} // namespace identrank
