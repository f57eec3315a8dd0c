#pragma once

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace sq {

// Base of every library error. `code` is the stable machine-readable tag
// used in CLI error JSON.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& detail, nlohmann::json context = nlohmann::json::object())
      : std::runtime_error(detail), code_(std::move(code)), context_(std::move(context)) {}
  const std::string& code() const { return code_; }
  const nlohmann::json& context() const { return context_; }
  nlohmann::json to_json() const {
    return {{"error", code_}, {"detail", what()}, {"context", context_}};
  }

 private:
  std::string code_;
  nlohmann::json context_;
};

#define SQ_DEFINE_ERROR(Name, tag)                                                      \
  class Name : public Error {                                                           \
   public:                                                                              \
    explicit Name(const std::string& detail, nlohmann::json ctx = nlohmann::json::object()) \
        : Error(tag, detail, std::move(ctx)) {}                                         \
  };

SQ_DEFINE_ERROR(AntipodalPoints, "antipodal_points")
SQ_DEFINE_ERROR(ZeroVector, "zero_vector")
SQ_DEFINE_ERROR(PointOutsideSimplex, "point_outside_simplex")
SQ_DEFINE_ERROR(DegenerateDirection, "degenerate_direction")
SQ_DEFINE_ERROR(OrthogonalityViolated, "orthogonality_violated")
SQ_DEFINE_ERROR(InvalidArgument, "invalid_argument")
SQ_DEFINE_ERROR(SingularPoint, "singular_point")
SQ_DEFINE_ERROR(QuadratureFailure, "quadrature_failure")
SQ_DEFINE_ERROR(AntipodalToPole, "antipodal_to_pole")
SQ_DEFINE_ERROR(PoleSingularity, "pole_singularity")
SQ_DEFINE_ERROR(HypothesisViolated, "hypothesis_violated")
SQ_DEFINE_ERROR(IntegralityDrift, "integrality_drift")
SQ_DEFINE_ERROR(IllConditionedGram, "ill_conditioned_gram")
SQ_DEFINE_ERROR(PackingFailure, "packing_failure")
SQ_DEFINE_ERROR(NoConvergence, "no_convergence")
SQ_DEFINE_ERROR(SeparationCollapse, "separation_collapse")
SQ_DEFINE_ERROR(NodeOnMirror, "node_on_mirror")
SQ_DEFINE_ERROR(DomainMismatch, "domain_mismatch")
SQ_DEFINE_ERROR(SymmetryMissing, "symmetry_missing")

#undef SQ_DEFINE_ERROR

}  // namespace sq
