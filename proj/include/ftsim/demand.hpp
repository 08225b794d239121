#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ftsim/network.hpp"
#include "ftsim/rng.hpp"

namespace ftsim::demand {

// The five access modes to the station. Enum order matches the CSV share
// column order.
enum class Mode { Auto = 0, Bus = 1, Walk = 2, Bike = 3, Fts = 4 };
constexpr int kModeCount = 5;

inline const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Auto: return "auto";
    case Mode::Bus: return "bus";
    case Mode::Walk: return "walk";
    case Mode::Bike: return "bike";
    case Mode::Fts: return "fts";
  }
  return "?";
}

struct ModeLos {
  double wait_s = 0;
  double ivt_s = 0;
  double cost = 0;  // dollars
};

struct PerceivedLos {
  std::array<ModeLos, kModeCount> by_mode{};
  ModeLos& operator[](Mode m) { return by_mode[static_cast<int>(m)]; }
  const ModeLos& operator[](Mode m) const { return by_mode[static_cast<int>(m)]; }
};

struct Traveler {
  int id = 0;
  NodeId home = 0;
  NodeId station = 0;
  double departure_s = 0;  // fixed per traveler
  Mode last_mode = Mode::Auto;
  PerceivedLos perceived;
};

// Linear-in-parameters systematic utility with per-mode constants and shared
// taste coefficients; a single cost coefficient keeps the logsum money metric
// well defined.
struct UtilityCoefficients {
  std::array<double, kModeCount> asc{};
  double beta_ivt_s = -0.0008;
  double beta_wait_s = -0.0016;
  double beta_cost = -0.3;
  double scale = 1.0;
};

inline double utility(const ModeLos& los, Mode m, const UtilityCoefficients& c) {
  return c.asc[static_cast<int>(m)] + c.beta_ivt_s * los.ivt_s + c.beta_wait_s * los.wait_s +
         c.beta_cost * los.cost;
}

inline double utility(const Traveler& t, Mode m, const UtilityCoefficients& c) {
  return utility(t.perceived[m], m, c);
}

using UtilityVector = std::array<double, kModeCount>;

// Max-shifted softmax; -inf utilities mark unavailable modes.
inline std::array<double, kModeCount> choice_probabilities(const UtilityVector& v, double scale) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (double x : v) vmax = std::max(vmax, x);
  if (!std::isfinite(vmax)) throw std::domain_error("choice_probabilities: no mode is available");
  std::array<double, kModeCount> p{};
  double sum = 0;
  for (int m = 0; m < kModeCount; ++m) {
    p[m] = std::isfinite(v[m]) ? std::exp(scale * (v[m] - vmax)) : 0.0;
    sum += p[m];
  }
  for (double& x : p) x /= sum;
  return p;
}

inline Mode choose_mode(const UtilityVector& v, double scale, RngStream& rng) {
  const auto p = choice_probabilities(v, scale);
  const double u = rng.uniform();
  double acc = 0;
  int last_positive = 0;
  for (int m = 0; m < kModeCount; ++m) {
    if (p[m] <= 0) continue;
    acc += p[m];
    last_positive = m;
    if (u < acc) return static_cast<Mode>(m);
  }
  return static_cast<Mode>(last_positive);  // u landed in rounding slack
}

// Day-to-day exponential smoothing of the chosen mode's level of service.
// Unchosen modes keep their prior perception, except the fts fare, which is
// posted and common knowledge.
inline void update_perception(Traveler& t, Mode chosen, const ModeLos& experienced, double lambda,
                              double posted_fts_fare) {
  if (lambda <= 0 || lambda > 1) throw std::invalid_argument("update_perception: lambda in (0,1]");
  ModeLos& p = t.perceived[chosen];
  p.wait_s = (1 - lambda) * p.wait_s + lambda * experienced.wait_s;
  p.ivt_s = (1 - lambda) * p.ivt_s + lambda * experienced.ivt_s;
  p.cost = (1 - lambda) * p.cost + lambda * experienced.cost;
  t.perceived[Mode::Fts].cost = posted_fts_fare;
  t.last_mode = chosen;
}

// Logsum of one traveler's choice set, in utils.
inline double logsum(const UtilityVector& v, double scale) {
  double vmax = -std::numeric_limits<double>::infinity();
  for (double x : v) vmax = std::max(vmax, x);
  if (!std::isfinite(vmax)) throw std::domain_error("logsum: no mode is available");
  double sum = 0;
  for (double x : v)
    if (std::isfinite(x)) sum += std::exp(scale * (x - vmax));
  return scale * vmax + std::log(sum);
}

// Money-metric consumer surplus: sum over travelers of logsum / |beta_cost *
// scale|.
inline double consumer_surplus(const std::vector<UtilityVector>& per_traveler,
                               const UtilityCoefficients& c) {
  if (c.beta_cost >= 0) throw std::invalid_argument("consumer_surplus: beta_cost must be negative");
  double total = 0;
  for (const auto& v : per_traveler) total += logsum(v, c.scale) / std::abs(c.beta_cost * c.scale);
  return total;
}

// Calibrate alternative-specific constants so population-average day-0 choice
// probabilities hit the target shares (auto is the reference, ASC 0). Each
// sweep bisects one mode's ASC against its predicted share with the others
// held fixed; the loop is a contraction for logit shares.
inline std::array<double, kModeCount> calibrate_ascs(
    const std::vector<UtilityVector>& base_utilities,  // ASC-free utilities
    const std::array<double, kModeCount>& target_shares, double scale, double tol = 1e-6,
    int max_sweeps = 200) {
  const std::size_t n = base_utilities.size();
  if (n == 0) throw std::invalid_argument("calibrate_ascs: empty population");
  // exp(scale * V_base) per traveler per mode, so share evaluation is cheap
  std::vector<std::array<double, kModeCount>> ev(n);
  for (std::size_t i = 0; i < n; ++i) {
    double vmax = -std::numeric_limits<double>::infinity();
    for (double x : base_utilities[i]) vmax = std::max(vmax, x);
    for (int m = 0; m < kModeCount; ++m)
      ev[i][m] = std::isfinite(base_utilities[i][m])
                     ? std::exp(scale * (base_utilities[i][m] - vmax))
                     : 0.0;
  }
  std::array<double, kModeCount> asc{};
  auto predicted_share = [&](int mode) {
    std::array<double, kModeCount> wm;
    for (int m = 0; m < kModeCount; ++m) wm[m] = std::exp(scale * asc[m]);
    double share = 0;
    for (std::size_t i = 0; i < n; ++i) {
      double num = 0, den = 0;
      for (int m = 0; m < kModeCount; ++m) {
        const double w = wm[m] * ev[i][m];
        den += w;
        if (m == mode) num = w;
      }
      share += num / den;
    }
    return share / static_cast<double>(n);
  };
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    for (int m = 1; m < kModeCount; ++m) {  // mode 0 (auto) is the reference
      double lo = -30, hi = 30;
      for (int it = 0; it < 40; ++it) {
        asc[m] = 0.5 * (lo + hi);
        if (predicted_share(m) < target_shares[m])
          lo = asc[m];
        else
          hi = asc[m];
      }
      asc[m] = 0.5 * (lo + hi);
    }
    double worst = 0;
    for (int m = 0; m < kModeCount; ++m)
      worst = std::max(worst, std::abs(predicted_share(m) - target_shares[m]));
    if (worst < tol) break;
  }
  return asc;
}

}  // namespace ftsim::demand
