#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace piperoute {

/// Argument outside the domain of an operation (profile interval, knot spacing, ...).
class domain_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite curvature/torsion seen while integrating.
class integration_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Frame too degenerate to re-orthonormalize.
class frame_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Knot outside the relaxed admissible set.
class rejected_action : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class scene_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class parse_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class state_error : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// NaN/Inf in network activations or losses.
class numeric_fault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// k*A0/R0 > 1 at some sample: the bending die cannot reach the required deflection.
class infeasible_geometry : public std::runtime_error {
 public:
  infeasible_geometry(const std::string& what, std::size_t index)
      : std::runtime_error(what), index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

}  // namespace piperoute
