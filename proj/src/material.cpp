// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/material.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace splatdyn {
namespace {

double number(const nlohmann::json& j, const char* key)
{
    const auto& v = j.at(key);
    if (!v.is_number()) throw MaterialError(std::string("$.") + key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw MaterialError(std::string("$.") + key, "must be finite");
    return x;
}

double unit_interval(const nlohmann::json& j, const char* key)
{
    const double x = number(j, key);
    if (x < 0 || x > 1) throw MaterialError(std::string("$.") + key, "must lie in [0,1]");
    return x;
}

} // namespace

const char* to_string(MaterialCategory c)
{
    switch (c) {
    case MaterialCategory::Deformation: return "deformation";
    case MaterialCategory::Granular: return "granular";
    case MaterialCategory::Rigid: return "rigid";
    }
    return "?";
}

Phase phase_of(MaterialCategory c)
{
    switch (c) {
    case MaterialCategory::Deformation: return Phase::Deformable;
    case MaterialCategory::Granular: return Phase::Granular;
    case MaterialCategory::Rigid: return Phase::Rigid;
    }
    return Phase::Deformable;
}

MaterialSpec parse_material(const nlohmann::json& j)
{
    if (!j.is_object()) throw MaterialError("$", "expected an object");
    if (!j.contains("category")) throw MaterialError("$.category", "missing");
    if (!j["category"].is_string()) throw MaterialError("$.category", "expected a string");
    const std::string cat = j["category"].get<std::string>();
    MaterialSpec s;
    std::set<std::string> allowed{"category", "mass"};
    if (cat == "deformation") {
        s.category = MaterialCategory::Deformation;
        allowed.insert({"deformation_resistance", "plasticity"});
    } else if (cat == "granular" || cat == "granule") {
        s.category = MaterialCategory::Granular;
        allowed.insert("friction");
    } else if (cat == "rigid") {
        s.category = MaterialCategory::Rigid;
        allowed.insert({"fragile", "force_threshold"});
    } else {
        throw MaterialError("$.category", "unknown category '" + cat + "'");
    }
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw MaterialError("$." + key, "not a field of category '" + std::string(to_string(s.category)) + "'");
        }
    }

    if (j.contains("mass")) {
        s.mass_kg = number(j, "mass");
        if (!(s.mass_kg > 0)) throw MaterialError("$.mass", "must be positive");
    } else if (s.category == MaterialCategory::Granular) {
        s.mass_kg = kDefaultGranularMass;
    } else {
        throw MaterialError("$.mass", "missing");
    }

    switch (s.category) {
    case MaterialCategory::Deformation:
        if (!j.contains("deformation_resistance")) throw MaterialError("$.deformation_resistance", "missing");
        if (!j.contains("plasticity")) throw MaterialError("$.plasticity", "missing");
        s.deformation_resistance = unit_interval(j, "deformation_resistance");
        s.plasticity = unit_interval(j, "plasticity");
        break;
    case MaterialCategory::Granular:
        if (!j.contains("friction")) throw MaterialError("$.friction", "missing");
        s.friction = unit_interval(j, "friction");
        break;
    case MaterialCategory::Rigid:
        if (j.contains("fragile")) {
            if (!j["fragile"].is_boolean()) throw MaterialError("$.fragile", "expected a boolean");
            s.fragile = j["fragile"].get<bool>();
        }
        if (s.fragile) {
            if (!j.contains("force_threshold") || j["force_threshold"].is_null())
                throw MaterialError("$.force_threshold", "required when fragile");
            s.force_threshold_n = number(j, "force_threshold");
            if (!(*s.force_threshold_n > 0)) throw MaterialError("$.force_threshold", "must be positive");
        } else if (j.contains("force_threshold") && !j["force_threshold"].is_null()) {
            throw MaterialError("$.force_threshold", "only allowed when fragile");
        }
        break;
    }
    return s;
}

nlohmann::json to_json(const MaterialSpec& s)
{
    nlohmann::json j{{"category", to_string(s.category)}, {"mass", s.mass_kg}};
    switch (s.category) {
    case MaterialCategory::Deformation:
        j["deformation_resistance"] = s.deformation_resistance.value_or(0);
        j["plasticity"] = s.plasticity.value_or(0);
        break;
    case MaterialCategory::Granular: j["friction"] = s.friction.value_or(0); break;
    case MaterialCategory::Rigid:
        j["fragile"] = s.fragile;
        if (s.fragile) j["force_threshold"] = s.force_threshold_n.value_or(0);
        break;
    }
    return j;
}

double correction_factor(std::size_t n, MaterialCategory category, double a)
{
    if (n < 1) throw ArgumentError("correction factor needs at least one particle");
    if (!(a > 0)) throw ArgumentError("correction constant a must be positive");
    const double x = double(n);
    return a * (category == MaterialCategory::Rigid ? std::sqrt(x) : std::cbrt(x));
}

SolverMaterial solver_material(const MaterialSpec& s, double correction)
{
    SolverMaterial m;
    if (s.category == MaterialCategory::Deformation) {
        m.stiffness = std::clamp(s.deformation_resistance.value_or(1.0), 0.05, 1.0);
        const double p = s.plasticity.value_or(0.0);
        m.yield = 0.1 * (1 - p);
        m.plastic_rate = p;
    }
    if (s.category == MaterialCategory::Granular) m.mu = 1.2 * s.friction.value_or(0.0);
    if (s.category == MaterialCategory::Rigid) {
        m.fragile = s.fragile;
        m.force_threshold = s.fragile ? s.force_threshold_n.value_or(0.0) * correction : 0.0;
    }
    return m;
}

double apply_material(const MaterialSpec& spec, ParticleSet& p, ConstraintSet& cs, double a)
{
    if (p.empty()) throw ArgumentError("cannot apply a material to an empty particle set");
    const Phase want = phase_of(spec.category);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.phase[i] != want) {
            throw ArgumentError(std::string("material category '") + to_string(spec.category) +
                                "' does not match particle phase '" + to_string(p.phase[i]) + "'");
        }
    }
    const std::size_t n = p.size();
    const double c = correction_factor(n, spec.category, a);
    const double total = spec.mass_kg * c;
    const double inv = double(n) / total;
    for (auto& w : p.inv_mass) w = inv;

    const SolverMaterial m = solver_material(spec, c);
    if (spec.category == MaterialCategory::Granular)
        for (auto& mu : p.friction) mu = m.mu;
    for (auto& d : cs.distance) d.stiffness = m.stiffness;
    for (auto& cl : cs.clusters) {
        cl.stiffness = spec.category == MaterialCategory::Rigid ? 1.0 : m.stiffness;
        cl.yield = m.yield;
        cl.plastic_rate = m.plastic_rate;
        cl.fragile = m.fragile;
        cl.force_threshold = m.force_threshold;
        cl.reset_rest(p);
    }
    return c;
}

} // namespace splatdyn
