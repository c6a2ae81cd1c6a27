/*
 * synthstroke
 *
 * Copyright 2026 The synthstroke Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "synthstroke/metrics.hpp"

namespace synthstroke {

struct MetricSummary
{
    std::string metric;
    std::size_t n = 0;
    double mean = 0;
    double median = 0;
    double stddev = 0; // population (ddof 0)
    std::optional<double> ci_half_width;
    double ci_lo() const { return mean - ci_half_width.value_or(0); }
    double ci_hi() const { return mean + ci_half_width.value_or(0); }
};

/// Two-sided 95% quantile t_{0.975, dof}.
inline double t_quantile_975(double dof)
{
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, 0.975);
}

/// Mean, median and mean +- t_{0.975,n-1} * s / sqrt(n) with s the population
/// standard deviation. The interval is omitted for n < 2.
inline MetricSummary summarize_values(std::string metric, const std::vector<double>& values)
{
    MetricSummary s;
    s.metric = std::move(metric);
    s.n = values.size();
    if (values.empty())
        return s;
    double sum = 0;
    for (double v : values)
        sum += v;
    s.mean = sum / static_cast<double>(s.n);
    double ss = 0;
    for (double v : values)
        ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n));
    s.median = percentile(values, 50);
    if (s.n >= 2)
        s.ci_half_width = t_quantile_975(static_cast<double>(s.n - 1)) * s.stddev / std::sqrt(static_cast<double>(s.n));
    return s;
}

/// One summary per metric column; error rows are skipped.
inline std::vector<MetricSummary> summarize(const std::vector<MetricReport>& reports)
{
    std::vector<double> cols[7];
    for (const auto& r : reports) {
        if (r.error)
            continue;
        cols[0].push_back(r.dice);
        cols[1].push_back(r.hd95);
        cols[2].push_back(r.avd);
        cols[3].push_back(static_cast<double>(r.ald));
        cols[4].push_back(r.lf1);
        cols[5].push_back(r.tpr);
        cols[6].push_back(r.fpr);
    }
    static const char* names[7] = {"dice", "hd95", "avd", "ald", "lf1", "tpr", "fpr"};
    std::vector<MetricSummary> out;
    for (int k = 0; k < 7; ++k)
        out.push_back(summarize_values(names[k], cols[k]));
    return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<MetricSummary>& rows)
{
    os << "metric,n,mean,median,ci_lo,ci_hi\n";
    for (const auto& r : rows) {
        os << r.metric << ',' << r.n << ',' << format_number(r.mean) << ',' << format_number(r.median) << ',';
        if (r.ci_half_width)
            os << format_number(r.ci_lo()) << ',' << format_number(r.ci_hi());
        else
            os << ',';
        os << '\n';
    }
}

inline void write_summary_table(std::ostream& os, const std::vector<MetricSummary>& rows)
{
    auto fixed = [](double v) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << v;
        return s.str();
    };
    os << std::left << std::setw(8) << "metric" << std::right << std::setw(6) << "n" << std::setw(12) << "mean"
       << std::setw(12) << "median" << "  " << std::left << "95% CI" << '\n';
    for (const auto& r : rows) {
        os << std::left << std::setw(8) << r.metric << std::right << std::setw(6) << r.n << std::setw(12)
           << fixed(r.mean) << std::setw(12) << fixed(r.median) << "  " << std::left;
        if (r.ci_half_width)
            os << '[' << fixed(r.ci_lo()) << ", " << fixed(r.ci_hi()) << ']';
        else
            os << '-';
        os << '\n';
    }
}

} // namespace synthstroke
