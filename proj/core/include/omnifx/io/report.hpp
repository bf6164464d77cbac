// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <ostream>
#include <span>
#include <string>

#include "omnifx/metrics.hpp"
#include "omnifx/trainer.hpp"

namespace omnifx::io {

/// Header `id,rdd,inner_diff,outer_diff,controllable,eor,dynamic_degree`;
/// reals with 6 decimals, booleans as 1/0, an unevaluable EOR as `NA`.
void write_metrics_csv(std::ostream& out, std::span<const metrics::MetricReport> reports);
std::string metrics_csv(std::span<const metrics::MetricReport> reports);

/// Header `step,stage,total,mse,aux`.
void write_loss_csv(std::ostream& out, std::span<const train::LossRecord> trace);

} // namespace omnifx::io
