#ifndef WMMF_METRIC_HPP
#define WMMF_METRIC_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "wmmf/engine.hpp"

namespace wmmf {

// State-space metric: documents of each state are listed as (route, residual)
// pairs sorted by residual (ties by route), padded with (0,0); the distance
// sums min(|dr| + |ds|, 1) over positions plus the interarrival gaps.
inline double state_distance(const NetworkState& x, const NetworkState& y) {
  auto list = [](const NetworkState& st) {
    std::vector<std::pair<double, int>> v;  // (residual, route+1)
    for (std::size_t r = 0; r < st.num_routes(); ++r)
      for (const auto& d : st.documents[r]) v.push_back({d.residual, static_cast<int>(r) + 1});
    std::sort(v.begin(), v.end());
    return v;
  };
  auto ax = list(x), ay = list(y);
  std::size_t n = std::max(ax.size(), ay.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double sx = i < ax.size() ? ax[i].first : 0.0;
    double sy = i < ay.size() ? ay[i].first : 0.0;
    int rx = i < ax.size() ? ax[i].second : 0;
    int ry = i < ay.size() ? ay[i].second : 0;
    total += std::min(std::abs(rx - ry) + std::abs(sx - sy), 1.0);
  }
  std::size_t m = std::max(x.residual_interarrival.size(), y.residual_interarrival.size());
  for (std::size_t r = 0; r < m; ++r) {
    double ux = r < x.residual_interarrival.size() ? x.residual_interarrival[r] : 0.0;
    double uy = r < y.residual_interarrival.size() ? y.residual_interarrival[r] : 0.0;
    total += std::abs(ux - uy);
  }
  return total;
}

}  // namespace wmmf

#endif  // WMMF_METRIC_HPP
