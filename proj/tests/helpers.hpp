#pragma once
// Shared test fixtures: full-precision reference records for the pinned
// jurisdictions, the shipped-data directory, and a rank-correlation helper.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "hivst/calibration.hpp"

namespace testutil {

inline std::string data_dir() { return HIVST_DATA_DIR; }

inline hivst::SurveillanceRecord alameda_record() {
  return {"Alameda County, CA", 0.0023333333333333335, 0.009, 0.88, 0.016,
          0.13977251672132332, 0.22982748327867666, 0.5104};
}
inline hivst::SurveillanceRecord san_francisco_record() {
  return {"San Francisco County, CA", 0.001, 0.007, 0.966, 0.028,
          0.09488019639100974, 0.3108398036089903, 0.5602799999999999};
}
inline hivst::SurveillanceRecord king_record() {
  return {"King County, WA", 0.002416666666666667, 0.01, 0.883, 0.017,
          0.0578971997243511, 0.31296280027564893, 0.5121399999999999};
}
inline hivst::SurveillanceRecord new_york_record() {
  return {"New York County, NY", 0.0009166666666666666, 0.01, 0.95, 0.016,
          0.24574050667620054, 0.22463042386373677, 0.4796290694600627};
}
inline hivst::SurveillanceRecord san_diego_record() {
  return {"San Diego County, CA", 0.002416666666666667, 0.009, 0.862, 0.014,
          0.2509736554518699, 0.22818206569950403, 0.38284427884862604};
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(),
            [&v](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;  // average rank for ties
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace testutil
