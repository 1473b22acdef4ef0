#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "acg/concept.hpp"

namespace acg::dsl {

struct Violation {
    std::string where;    // e.g. "primitive grip", "grasp grasp_above", "force push_clockwise"
    std::string message;  // what failed
    ParamBinding binding; // offending structural+theta binding
};

struct ValidationReport {
    std::string concept_id;
    int samples = 0;
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
};

/// Samples the parameter space `n_samples` times and checks: primitive
/// sizes strictly positive, evaluated poses orthonormal, grasp widths
/// positive, force directions non-zero. Violations are collected, not
/// thrown.
ValidationReport validate_concept(const AnalyticConcept& acon, int n_samples,
                                  std::uint64_t seed);

}  // namespace acg::dsl
