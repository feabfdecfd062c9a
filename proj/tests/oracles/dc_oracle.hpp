#pragma once

// Contract-and-solve reference for the exchange capacity.
//
// Closed switches merge addresses into buses; each island of the bus graph
// (through in-service lines) must balance, which may pin lambda. Line flows
// follow from the reduced Laplacian of each island and are affine in lambda,
// so every thermal limit is an interval constraint on lambda and the optimum
// sits at one of the interval ends. Switch flows are unconstrained (the
// big-M limit is assumed not to bind).

#include <optional>

#include "osr/h2mg.hpp"

namespace oracle {

enum class Status { Optimal, Infeasible, Unbounded };

struct DcResult {
  Status status = Status::Infeasible;
  double capacity_mw = 0.0;
  double lambda = 0.0;
};

DcResult dc_capacity(const osr::Grid& grid, const osr::Decision& decision);

}  // namespace oracle
