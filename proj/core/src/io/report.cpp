// Copyright 2026 The OmniFX Authors
// SPDX-License-Identifier: Apache-2.0

#include "omnifx/io/report.hpp"

#include <cstdio>
#include <sstream>

namespace omnifx::io {

namespace {

std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf) == "-0.000000" ? "0.000000" : buf;
}

std::string general(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

void write_metrics_csv(std::ostream& out, std::span<const metrics::MetricReport> reports) {
    out << "id,rdd,inner_diff,outer_diff,controllable,eor,dynamic_degree\n";
    for (const auto& r : reports) {
        out << r.id << ',' << fixed6(r.rdd) << ',' << fixed6(r.inner_diff) << ',' << fixed6(r.outer_diff) << ','
            << (r.controllable ? 1 : 0) << ',' << (r.eor ? (*r.eor ? "1" : "0") : "NA") << ','
            << fixed6(r.dynamic_degree) << '\n';
    }
}

std::string metrics_csv(std::span<const metrics::MetricReport> reports) {
    std::ostringstream out;
    write_metrics_csv(out, reports);
    return out.str();
}

void write_loss_csv(std::ostream& out, std::span<const train::LossRecord> trace) {
    out << "step,stage,total,mse,aux\n";
    for (const auto& r : trace) {
        out << r.step << ',' << r.stage << ',' << general(r.total) << ',' << general(r.mse) << ','
            << general(r.aux) << '\n';
    }
}

} // namespace omnifx::io
