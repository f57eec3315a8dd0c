#include "spherequad/config.hpp"

#include "spherequad/errors.hpp"

namespace sq {

Tolerances profile_tolerances(TolProfile p) {
  Tolerances t;
  switch (p) {
    case TolProfile::Fast:
      t.measure = 1e-7;
      t.integrality = 1e-7;
      t.residual = 1e-7;
      t.balance = 1e-7;
      break;
    case TolProfile::Default:
      break;
    case TolProfile::Strict:
      t.measure = 1e-11;
      t.integrality = 1e-11;
      t.residual = 1e-11;
      t.balance = 1e-11;
      break;
  }
  return t;
}

TolProfile parse_tol_profile(const std::string& s) {
  if (s == "fast") return TolProfile::Fast;
  if (s == "default") return TolProfile::Default;
  if (s == "strict") return TolProfile::Strict;
  throw InvalidArgument("unknown tolerance profile", {{"profile", s}});
}

}  // namespace sq
