#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgnn/autodiff.hpp"
#include "stgnn/csv.hpp"
#include "stgnn/matrix.hpp"

namespace stgnn {

inline double mse_loss(const DenseMatrix& yhat, const DenseMatrix& y) {
    check_same_shape(yhat, y, "mse_loss");
    double s = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = yhat.data[i] - y.data[i];
        s += d * d;
    }
    return s / static_cast<double>(y.size());
}

inline Var mse_loss(Tape& tape, Var yhat, Var y) {
    Var diff = tape.sub(yhat, y);
    return tape.scale(tape.sum_all(tape.hadamard(diff, diff)),
                      1.0 / static_cast<double>(yhat.rows() * yhat.cols()));
}

struct MetricsRow {
    double mse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    double smape = 0.0;
    bool r2_defined = true;
};

struct MetricsReport {
    MetricsRow overall;
    std::vector<std::string> building_ids;
    std::vector<MetricsRow> per_building;
};

// noinline: exact-equality guarantees between commands (e.g. the robustness
// sweep's 0% row vs plain evaluation) need every call site to run the same
// machine code; separately inlined copies may contract FMAs differently.
[[gnu::noinline]] inline MetricsRow metrics_row(const std::vector<double>& yhat,
                                                const std::vector<double>& y) {
    if (yhat.size() != y.size()) throw std::invalid_argument("metrics: length mismatch");
    if (y.empty()) throw std::invalid_argument("metrics: empty input");
    const double n = static_cast<double>(y.size());
    MetricsRow r;
    double ybar = 0.0;
    for (double v : y) ybar += v;
    ybar /= n;
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < y.size(); ++i) {
        const double d = yhat[i] - y[i];
        r.mse += d * d;
        r.mae += std::abs(d);
        ss_res += d * d;
        ss_tot += (y[i] - ybar) * (y[i] - ybar);
        const double denom = (std::abs(y[i]) + std::abs(yhat[i])) / 2.0;
        r.smape += (denom == 0.0) ? 0.0 : std::abs(d) / denom;
    }
    r.mse /= n;
    r.mae /= n;
    r.smape /= n;
    if (ss_tot == 0.0) {
        r.r2_defined = false;
        r.r2 = std::numeric_limits<double>::quiet_NaN();
    } else {
        r.r2 = 1.0 - ss_res / ss_tot;
    }
    return r;
}

// yhat/y hold pooled predictions: one row per (sample, horizon step), one
// column per building. Overall metrics pool every entry; per-building rows
// use single columns.
inline MetricsReport metrics(const DenseMatrix& yhat, const DenseMatrix& y,
                             const std::vector<std::string>& building_ids = {}) {
    check_same_shape(yhat, y, "metrics");
    MetricsReport rep;
    rep.overall = metrics_row(std::vector<double>(yhat.data.begin(), yhat.data.end()),
                              std::vector<double>(y.data.begin(), y.data.end()));
    for (int n = 0; n < y.cols; ++n) {
        std::vector<double> ph(y.rows), py(y.rows);
        for (int i = 0; i < y.rows; ++i) {
            ph[i] = yhat(i, n);
            py[i] = y(i, n);
        }
        rep.per_building.push_back(metrics_row(ph, py));
        rep.building_ids.push_back(static_cast<int>(building_ids.size()) > n
                                       ? building_ids[n]
                                       : "building_" + std::to_string(n));
    }
    return rep;
}

inline std::string metric_cell(double v, bool defined = true) {
    return defined ? format_double(v) : std::string();
}

inline void write_metrics_csv(const std::string& path, const MetricsReport& rep) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"overall", format_double(rep.overall.mse), format_double(rep.overall.mae),
                    metric_cell(rep.overall.r2, rep.overall.r2_defined),
                    format_double(rep.overall.smape)});
    for (size_t n = 0; n < rep.per_building.size(); ++n) {
        const MetricsRow& r = rep.per_building[n];
        rows.push_back({"building_" + rep.building_ids[n], format_double(r.mse),
                        format_double(r.mae), metric_cell(r.r2, r.r2_defined),
                        format_double(r.smape)});
    }
    write_csv(path, {"scope", "mse", "mae", "r2", "smape"}, rows);
}

}  // namespace stgnn
