#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stgnn/csv.hpp"
#include "stgnn/matrix.hpp"
#include "stgnn/rng.hpp"

namespace stgnn {

// ---------------------------------------------------------------------------
// Calendar arithmetic on an hourly epoch (hours since 1970-01-01 00:00 UTC).
// ---------------------------------------------------------------------------

struct CivilDate {
    int year;
    int month;
    int day;
};

inline int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

inline CivilDate civil_from_days(int64_t z) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const int doe = static_cast<int>(z - era * 146097);
    const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t y = yoe + era * 400;
    const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const int mp = (5 * doy + 2) / 153;
    const int d = doy - (153 * mp + 2) / 5 + 1;
    const int m = mp + (mp < 10 ? 3 : -9);
    return {static_cast<int>(y + (m <= 2)), m, d};
}

// 0 = Sunday .. 6 = Saturday
inline int weekday_from_days(int64_t z) {
    return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

inline int64_t parse_timestamp(const std::string& s) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    char sep = 0;
    const int got =
        std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &sec);
    if (got < 5 || (sep != ' ' && sep != 'T'))
        throw std::runtime_error("cannot parse timestamp '" + s + "'");
    return days_from_civil(y, mo, d) * 24 + h;
}

inline std::string format_timestamp(int64_t hours) {
    int64_t days = hours / 24;
    int h = static_cast<int>(hours % 24);
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    const CivilDate c = civil_from_days(days);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00:00", c.year, c.month, c.day, h);
    return buf;
}

struct CalendarFields {
    int month;
    int day;
    int hour;
    double day_type;  // 0 = workday, 1 = non-workday
};

inline CalendarFields calendar_at(int64_t ts_hours) {
    int64_t days = ts_hours / 24;
    int h = static_cast<int>(ts_hours % 24);
    if (h < 0) {
        h += 24;
        days -= 1;
    }
    const CivilDate c = civil_from_days(days);
    const int wd = weekday_from_days(days);
    const double day_type = (wd == 0 || wd == 6) ? 1.0 : 0.0;
    return {c.month, c.day, h, day_type};
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct BuildingSeries {
    std::string building_id;
    std::string site_id;
    std::vector<int64_t> timestamps;  // hourly epoch, strictly increasing
    std::vector<double> load;
    std::vector<double> outdoor_temp;
    std::vector<double> dew_point;
    std::vector<double> wind_dir;
    std::vector<double> wind_speed;

    size_t length() const { return timestamps.size(); }

    void check_consistent() const {
        const size_t n = timestamps.size();
        if (load.size() != n || outdoor_temp.size() != n || dew_point.size() != n ||
            wind_dir.size() != n || wind_speed.size() != n)
            throw std::logic_error("building series '" + building_id +
                                   "' has per-timestamp arrays of differing length");
        for (size_t i = 1; i < n; ++i)
            if (timestamps[i] <= timestamps[i - 1])
                throw std::logic_error("building series '" + building_id +
                                       "' timestamps not strictly increasing");
    }
};

struct Scaler {
    double min = 0.0;
    double max = 0.0;
    bool degenerate = false;

    double transform(double x) const { return degenerate ? 0.0 : (x - min) / (max - min); }
    double inverse(double z) const { return degenerate ? min : min + z * (max - min); }
};

inline constexpr int kFeatureCount = 6;
inline constexpr const char* kFeatureNames[kFeatureCount] = {
    "load", "day_type", "outdoor_temp", "dew_point", "wind_dir", "wind_speed"};

struct BuildingDataset {
    std::vector<std::string> building_ids;
    std::vector<int64_t> timestamps;                      // shared grid, length L
    std::vector<double> feature_tensor;                   // L*N*d, layout [(t*N + n)*d + f]
    std::vector<std::array<Scaler, kFeatureCount>> scalers;  // per building, per feature
    int L = 0;
    int N = 0;
    int d = kFeatureCount;

    double at(int t, int n, int f) const {
        return feature_tensor[(static_cast<size_t>(t) * N + n) * d + f];
    }
    double& at(int t, int n, int f) {
        return feature_tensor[(static_cast<size_t>(t) * N + n) * d + f];
    }
    DenseMatrix step(int t) const {
        DenseMatrix m(N, d);
        std::copy_n(feature_tensor.begin() + static_cast<size_t>(t) * N * d,
                    static_cast<size_t>(N) * d, m.data.begin());
        return m;
    }
};

struct SpatioTemporalSample {
    std::vector<DenseMatrix> x;  // T matrices, each N x d
    DenseMatrix y;               // M x N, normalized load
    int origin_index = 0;
};

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

inline double parse_cell(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    return v;
}

struct WeatherPoint {
    double outdoor_temp, dew_point, wind_dir, wind_speed;
};

inline std::vector<BuildingSeries> load_bdg2(const std::string& meter_csv,
                                             const std::string& weather_csv,
                                             const std::string& metadata_csv,
                                             const std::vector<std::string>& building_ids,
                                             int max_gap = 24) {
    const CsvTable meta = read_csv(metadata_csv);
    const int mc_b = meta.column("building_id");
    const int mc_s = meta.column("site_id");
    std::map<std::string, std::string> site_of;
    for (const auto& r : meta.rows) site_of[r[mc_b]] = r[mc_s];

    const CsvTable wx = read_csv(weather_csv);
    const int wc_t = wx.column("timestamp");
    const int wc_s = wx.column("site_id");
    const int wc_a = wx.column("air_temperature");
    const int wc_d = wx.column("dew_temperature");
    const int wc_wd = wx.column("wind_direction");
    const int wc_ws = wx.column("wind_speed");
    std::map<std::string, std::map<int64_t, WeatherPoint>> weather;
    for (const auto& r : wx.rows) {
        weather[r[wc_s]][parse_timestamp(r[wc_t])] =
            WeatherPoint{parse_cell(r[wc_a]), parse_cell(r[wc_d]), parse_cell(r[wc_wd]),
                         parse_cell(r[wc_ws])};
    }

    const CsvTable meter = read_csv(meter_csv);
    const int tc_t = meter.column("timestamp");
    const int tc_b = meter.column("building_id");
    const int tc_v = meter.column("value");
    std::map<std::string, std::vector<std::pair<int64_t, double>>> readings;
    for (const auto& r : meter.rows)
        readings[r[tc_b]].emplace_back(parse_timestamp(r[tc_t]), parse_cell(r[tc_v]));

    std::vector<BuildingSeries> out;
    out.reserve(building_ids.size());
    for (const auto& id : building_ids) {
        auto it = readings.find(id);
        if (it == readings.end()) {
            std::string avail;
            for (const auto& [bid, _] : readings) {
                if (!avail.empty()) avail += ", ";
                avail += bid;
            }
            throw std::runtime_error("building id '" + id +
                                     "' not found in meter data; available: " + avail);
        }
        auto rows = it->second;
        std::sort(rows.begin(), rows.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (size_t i = 1; i < rows.size(); ++i)
            if (rows[i].first == rows[i - 1].first)
                throw std::runtime_error("duplicate timestamp " + format_timestamp(rows[i].first) +
                                         " for building '" + id + "'");

        auto ms = site_of.find(id);
        if (ms == site_of.end())
            throw std::runtime_error("building id '" + id + "' missing from metadata");

        BuildingSeries s;
        s.building_id = id;
        s.site_id = ms->second;
        const int64_t t0 = rows.front().first;
        const int64_t t1 = rows.back().first;
        const auto* site_wx =
            weather.count(s.site_id) ? &weather.at(s.site_id) : nullptr;
        size_t r = 0;
        for (int64_t t = t0; t <= t1; ++t) {
            s.timestamps.push_back(t);
            if (r < rows.size() && rows[r].first == t) {
                s.load.push_back(rows[r].second);
                ++r;
            } else {
                s.load.push_back(std::numeric_limits<double>::quiet_NaN());
            }
            WeatherPoint w{std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN(),
                           std::numeric_limits<double>::quiet_NaN()};
            if (site_wx) {
                auto wit = site_wx->find(t);
                if (wit != site_wx->end()) w = wit->second;
            }
            s.outdoor_temp.push_back(w.outdoor_temp);
            s.dew_point.push_back(w.dew_point);
            s.wind_dir.push_back(w.wind_dir);
            s.wind_speed.push_back(w.wind_speed);
        }
        // Missing meter rows become NaN holes; reject holes wider than max_gap here
        // so the error names the raw gap rather than surfacing later in cleaning.
        int run = 0;
        for (size_t i = 0; i < s.load.size(); ++i) {
            if (std::isnan(s.load[i])) {
                ++run;
            } else {
                run = 0;
            }
            if (run > max_gap)
                throw std::runtime_error("building '" + id + "': gap of more than " +
                                         std::to_string(max_gap) + " hours ending at " +
                                         format_timestamp(s.timestamps[i]));
        }
        out.push_back(std::move(s));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

inline void clean_channel(std::vector<double>& v, int max_gap,
                          const std::vector<int64_t>& timestamps, const std::string& channel,
                          const std::string& building_id) {
    const size_t n = v.size();
    size_t i = 0;
    while (i < n) {
        if (!std::isnan(v[i])) {
            ++i;
            continue;
        }
        size_t j = i;
        while (j < n && std::isnan(v[j])) ++j;
        const size_t run = j - i;
        if (run > static_cast<size_t>(max_gap))
            throw std::runtime_error("building '" + building_id + "': " + std::to_string(run) +
                                     "-hour gap in " + channel + " starting at " +
                                     format_timestamp(timestamps[i]) + " exceeds max gap " +
                                     std::to_string(max_gap));
        if (i == 0 && j == n)
            throw std::runtime_error("building '" + building_id + "': channel " + channel +
                                     " has no observed values");
        if (i == 0) {
            std::fill(v.begin(), v.begin() + j, v[j]);
        } else if (j == n) {
            std::fill(v.begin() + i, v.end(), v[i - 1]);
        } else {
            const double a = v[i - 1];
            const double b = v[j];
            const double span = static_cast<double>(j - (i - 1));
            for (size_t t = i; t < j; ++t)
                v[t] = a + (b - a) * (static_cast<double>(t - (i - 1)) / span);
        }
        i = j;
    }
}

inline BuildingSeries clean_series(const BuildingSeries& s, int max_gap = 24) {
    s.check_consistent();
    BuildingSeries out = s;
    clean_channel(out.load, max_gap, out.timestamps, "load", out.building_id);
    clean_channel(out.outdoor_temp, max_gap, out.timestamps, "outdoor_temp", out.building_id);
    clean_channel(out.dew_point, max_gap, out.timestamps, "dew_point", out.building_id);
    clean_channel(out.wind_dir, max_gap, out.timestamps, "wind_dir", out.building_id);
    clean_channel(out.wind_speed, max_gap, out.timestamps, "wind_speed", out.building_id);
    return out;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

inline std::pair<std::vector<double>, Scaler> minmax_fit_transform(const std::vector<double>& x) {
    if (x.empty()) throw std::invalid_argument("minmax_fit_transform: empty input");
    Scaler sc;
    sc.min = *std::min_element(x.begin(), x.end());
    sc.max = *std::max_element(x.begin(), x.end());
    if (!std::isfinite(sc.min) || !std::isfinite(sc.max))
        throw std::invalid_argument("minmax_fit_transform: non-finite input");
    std::vector<double> z(x.size());
    if (sc.max == sc.min) {
        sc.degenerate = true;
        std::fill(z.begin(), z.end(), 0.0);
    } else {
        for (size_t i = 0; i < x.size(); ++i) z[i] = (x[i] - sc.min) / (sc.max - sc.min);
    }
    return {std::move(z), sc};
}

inline BuildingDataset build_dataset(const std::vector<BuildingSeries>& series) {
    if (series.empty()) throw std::invalid_argument("build_dataset: no buildings");
    for (const auto& s : series) {
        s.check_consistent();
        if (s.timestamps != series.front().timestamps)
            throw std::runtime_error("building '" + s.building_id +
                                     "' does not cover the common timestamp range");
    }
    BuildingDataset ds;
    ds.N = static_cast<int>(series.size());
    ds.L = static_cast<int>(series.front().length());
    ds.timestamps = series.front().timestamps;
    ds.feature_tensor.assign(static_cast<size_t>(ds.L) * ds.N * ds.d, 0.0);
    ds.scalers.resize(ds.N);

    std::vector<double> day_type(ds.L);
    for (int t = 0; t < ds.L; ++t) day_type[t] = calendar_at(ds.timestamps[t]).day_type;

    for (int n = 0; n < ds.N; ++n) {
        const BuildingSeries& s = series[n];
        ds.building_ids.push_back(s.building_id);
        const std::vector<double>* raw[kFeatureCount] = {&s.load,     &day_type,   &s.outdoor_temp,
                                                         &s.dew_point, &s.wind_dir, &s.wind_speed};
        for (int f = 0; f < kFeatureCount; ++f) {
            auto [z, sc] = minmax_fit_transform(*raw[f]);
            ds.scalers[n][f] = sc;
            for (int t = 0; t < ds.L; ++t) ds.at(t, n, f) = z[t];
        }
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Windowing and splits
// ---------------------------------------------------------------------------

inline std::vector<SpatioTemporalSample> make_windows(const BuildingDataset& ds, int T = 12,
                                                      int M = 1) {
    if (T < 1 || M < 1) throw std::invalid_argument("make_windows: T and M must be positive");
    if (ds.L < T + M) {
        std::cerr << "warning: series length " << ds.L << " shorter than window T+M=" << (T + M)
                  << "; no samples produced\n";
        return {};
    }
    const int count = ds.L - T - M + 1;
    std::vector<SpatioTemporalSample> samples;
    samples.reserve(count);
    for (int o = 0; o < count; ++o) {
        SpatioTemporalSample sm;
        sm.origin_index = o;
        sm.x.reserve(T);
        for (int t = 0; t < T; ++t) sm.x.push_back(ds.step(o + t));
        sm.y = DenseMatrix(M, ds.N);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < ds.N; ++n) sm.y(m, n) = ds.at(o + T + m, n, 0);
        samples.push_back(std::move(sm));
    }
    return samples;
}

struct SampleSplit {
    std::vector<SpatioTemporalSample> train, val, test;
};

inline SampleSplit split_chrono(std::vector<SpatioTemporalSample> samples,
                                std::array<double, 3> ratios = {0.8, 0.1, 0.1}) {
    const size_t n = samples.size();
    if (n < 3) throw std::invalid_argument("split_chrono: need at least 3 samples, got " +
                                           std::to_string(n));
    for (double r : ratios)
        if (!(r > 0.0)) throw std::invalid_argument("split_chrono: ratios must be positive");
    if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        throw std::invalid_argument("split_chrono: ratios must sum to 1");
    for (size_t i = 1; i < n; ++i)
        if (samples[i].origin_index <= samples[i - 1].origin_index)
            throw std::invalid_argument("split_chrono: samples not ordered by origin_index");

    const size_t n_train = static_cast<size_t>(std::floor(ratios[0] * static_cast<double>(n)));
    const size_t n_val = static_cast<size_t>(std::floor(ratios[1] * static_cast<double>(n)));
    SampleSplit sp;
    sp.train.assign(std::make_move_iterator(samples.begin()),
                    std::make_move_iterator(samples.begin() + n_train));
    sp.val.assign(std::make_move_iterator(samples.begin() + n_train),
                  std::make_move_iterator(samples.begin() + n_train + n_val));
    sp.test.assign(std::make_move_iterator(samples.begin() + n_train + n_val),
                   std::make_move_iterator(samples.end()));
    return sp;
}

// ---------------------------------------------------------------------------
// Synthetic clustered generator
// ---------------------------------------------------------------------------

struct SynthResult {
    std::vector<BuildingSeries> series;  // raw (unnormalized) series
    std::vector<int> labels;             // ground-truth cluster per building
    BuildingDataset dataset;
};

inline SynthResult synth_generate(int n_clusters, int buildings_per_cluster, int L,
                                  double noise_sd, uint64_t seed) {
    if (n_clusters < 1 || buildings_per_cluster < 1)
        throw std::invalid_argument("synth_generate: cluster counts must be >= 1");
    if (L < 1) throw std::invalid_argument("synth_generate: L must be >= 1");

    const int N = n_clusters * buildings_per_cluster;
    const int64_t start = days_from_civil(2016, 1, 1) * 24;
    const double two_pi = 2.0 * M_PI;

    // Shared per-cluster weather with smooth AR(1) disturbances.
    std::vector<std::vector<double>> temp(n_clusters), dew(n_clusters), wdir(n_clusters),
        wspd(n_clusters);
    for (int j = 0; j < n_clusters; ++j) {
        Rng wrng(derive_seed(seed, 1000 + static_cast<uint64_t>(j)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        temp[j].resize(L);
        dew[j].resize(L);
        wdir[j].resize(L);
        wspd[j].resize(L);
        double ar_t = 0.0, ar_s = 0.0;
        double dir = 360.0 * (static_cast<double>(j) + 0.5) / n_clusters;
        for (int t = 0; t < L; ++t) {
            ar_t = 0.9 * ar_t + gauss(wrng);
            ar_s = 0.85 * ar_s + 0.4 * gauss(wrng);
            const double seasonal = 10.0 + 10.0 * std::sin(two_pi * t / 8760.0 + two_pi * j / 12.0);
            const double diurnal = 5.0 * std::sin(two_pi * ((t % 24) / 24.0) - 0.6);
            temp[j][t] = seasonal + diurnal + ar_t;
            dew[j][t] = temp[j][t] - 4.0 - 1.5 * std::sin(two_pi * t / 8760.0);
            dir = std::fmod(dir + 8.0 * gauss(wrng) + 360.0 * 4, 360.0);
            wdir[j][t] = dir;
            wspd[j][t] = std::max(0.0, 3.5 + ar_s);
        }
    }

    SynthResult res;
    res.series.reserve(N);
    res.labels.reserve(N);
    for (int i = 0; i < N; ++i) {
        const int j = i / buildings_per_cluster;
        Rng nrng(derive_seed(seed, 2000 + static_cast<uint64_t>(i)));
        std::normal_distribution<double> gauss(0.0, 1.0);

        const double level = 90.0 + 35.0 * j;
        const double amp_day = 22.0 + 5.0 * ((j * 2) % 5);
        const double phase_day = two_pi * j / n_clusters;
        const double amp_week = 11.0 + 3.0 * (j % 4);
        const double phase_week = M_PI * j / n_clusters;
        const double weather_gain = 6.0 + 2.5 * (j % 3);
        const double workday_gain = (j % 2 == 0) ? 14.0 : -14.0;

        BuildingSeries s;
        char bid[16], sid[16];
        std::snprintf(bid, sizeof(bid), "B%03d", i);
        std::snprintf(sid, sizeof(sid), "S%02d", j);
        s.building_id = bid;
        s.site_id = sid;
        s.timestamps.resize(L);
        s.load.resize(L);
        s.outdoor_temp = temp[j];
        s.dew_point = dew[j];
        s.wind_dir = wdir[j];
        s.wind_speed = wspd[j];
        for (int t = 0; t < L; ++t) {
            s.timestamps[t] = start + t;
            const double workday = 1.0 - calendar_at(s.timestamps[t]).day_type;
            double v = level;
            v += amp_day * std::sin(two_pi * ((t % 24) / 24.0) + phase_day);
            v += amp_week * std::sin(two_pi * ((t % 168) / 168.0) + phase_week);
            v += weather_gain * (temp[j][t] - 10.0) / 10.0;
            v += workday_gain * workday;
            if (noise_sd > 0.0) v += noise_sd * gauss(nrng);
            s.load[t] = v;
        }
        res.series.push_back(std::move(s));
        res.labels.push_back(j);
    }
    res.dataset = build_dataset(res.series);
    return res;
}

// ---------------------------------------------------------------------------
// Dataset emission in the three-file schema
// ---------------------------------------------------------------------------

inline std::string cell_or_empty(double v) { return std::isnan(v) ? "" : format_double(v); }

inline void write_dataset_csv(const std::string& dir, const std::vector<BuildingSeries>& series) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    std::vector<std::vector<std::string>> meter_rows;
    for (const auto& s : series)
        for (size_t t = 0; t < s.length(); ++t)
            meter_rows.push_back(
                {format_timestamp(s.timestamps[t]), s.building_id, cell_or_empty(s.load[t])});
    write_csv(dir + "/meter.csv", {"timestamp", "building_id", "value"}, meter_rows);

    std::vector<std::string> site_order;
    std::map<std::string, const BuildingSeries*> site_rep;
    for (const auto& s : series)
        if (!site_rep.count(s.site_id)) {
            site_rep[s.site_id] = &s;
            site_order.push_back(s.site_id);
        }
    std::vector<std::vector<std::string>> wx_rows;
    for (const auto& site : site_order) {
        const BuildingSeries* s = site_rep.at(site);
        for (size_t t = 0; t < s->length(); ++t)
            wx_rows.push_back({format_timestamp(s->timestamps[t]), site,
                               cell_or_empty(s->outdoor_temp[t]), cell_or_empty(s->dew_point[t]),
                               cell_or_empty(s->wind_dir[t]), cell_or_empty(s->wind_speed[t])});
    }
    write_csv(dir + "/weather.csv",
              {"timestamp", "site_id", "air_temperature", "dew_temperature", "wind_direction",
               "wind_speed"},
              wx_rows);

    std::vector<std::vector<std::string>> meta_rows;
    for (const auto& s : series) meta_rows.push_back({s.building_id, s.site_id});
    write_csv(dir + "/metadata.csv", {"building_id", "site_id"}, meta_rows);
}

}  // namespace stgnn
