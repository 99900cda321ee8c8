// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/constraints.hpp"

#include <nlohmann/json.hpp>

#include <optional>

namespace splatdyn {

enum class MaterialCategory { Deformation, Granular, Rigid };

const char* to_string(MaterialCategory c);
Phase phase_of(MaterialCategory c);

/// Mass used for granular specs that omit it, kg.
constexpr double kDefaultGranularMass = 0.1;

struct MaterialSpec {
    MaterialCategory category = MaterialCategory::Deformation;
    double mass_kg = 1;
    std::optional<double> deformation_resistance; ///< deformation only
    std::optional<double> plasticity;             ///< deformation only
    std::optional<double> friction;               ///< granular only
    bool fragile = false;                         ///< rigid only
    std::optional<double> force_threshold_n;      ///< rigid, required iff fragile

    bool operator==(const MaterialSpec&) const = default;
};

/// Schema violation; path() names the offending field (e.g. "$.friction").
class MaterialError : public std::runtime_error {
public:
    MaterialError(const std::string& path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(path)
    {
    }
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

/// Keys: category ("deformation" | "granular" | "rigid", "granule" accepted), mass,
/// deformation_resistance, plasticity, friction, fragile, force_threshold. Unknown keys and
/// fields that do not belong to the category are rejected.
MaterialSpec parse_material(const nlohmann::json& j);
nlohmann::json to_json(const MaterialSpec& spec);

/// a * N^(1/3) for deformation and granular, a * N^(1/2) for rigid.
double correction_factor(std::size_t particle_count, MaterialCategory category, double a = 1.0);

/// Solver parameters derived from the normalized material values.
struct SolverMaterial {
    double stiffness = 1;
    double yield = 0.1;
    double plastic_rate = 0;
    double mu = 0.5;
    bool fragile = false;
    double force_threshold = 0; ///< N, already scaled by the correction factor
};

SolverMaterial solver_material(const MaterialSpec& spec, double correction);

/// Sets the object's total mass to mass * C split equally over its particles and writes the
/// derived stiffness, plastic yield and rate, friction and fracture settings into its
/// constraints. Throws ArgumentError when particle phases do not match the category.
/// Returns the correction factor used.
double apply_material(const MaterialSpec& spec, ParticleSet& particles, ConstraintSet& constraints, double a = 1.0);

} // namespace splatdyn
