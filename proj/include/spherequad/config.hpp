#pragma once

#include <string>

namespace sq {

// Every numeric threshold used across the library. Defaults are the
// documented "default" profile; see profile_tolerances() for the others.
struct Tolerances {
  // geometry
  double unit_renorm = 1e-12;
  double antipodal = 1e-9;
  double orthogonality = 1e-12;
  double zero_vector = 1e-12;
  double independence = 1e-10;
  double admissibility = 1e-10;
  double simplex_membership = 1e-10;

  // measures
  double measure = 1e-9;         // absolute, on normalized mass
  double normalization = 1e-11;  // Z at construction
  double gram = 1e-11;

  // partitions
  double integrality = 1e-9;     // |N w - k| <= N * integrality
  double balance = 1e-9;         // balancing pole hemisphere residual
  double final_drift = 1e-6;

  // cubature
  double residual = 1e-9;        // max moment residual target
  double gram_condition = 1e12;
  double mirror = 1e-6;
};

enum class TolProfile { Fast, Default, Strict };

Tolerances profile_tolerances(TolProfile p);
TolProfile parse_tol_profile(const std::string& s);

}  // namespace sq
