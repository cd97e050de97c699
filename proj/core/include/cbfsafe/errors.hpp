#pragma once

#include <stdexcept>
#include <string>

namespace cbfsafe {

/// Invalid model, spec, bound or run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A physical quantity was evaluated outside its domain (e.g. v <= 0 in the resistance model).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// b_F(x) <= 0 where the auxiliary-variable dynamics require it strictly positive.
class FeasibilityLoss : public std::runtime_error {
 public:
  FeasibilityLoss(const std::string& what, double t, double b_f)
      : std::runtime_error(what), time(t), feasibility_value(b_f) {}
  double time;
  double feasibility_value;
};

class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double t)
      : std::runtime_error(what), time(t) {}
  double time;
};

}  // namespace cbfsafe
