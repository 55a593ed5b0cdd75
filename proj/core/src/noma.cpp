#include "irsim/noma.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace irsim {

std::vector<EquivalentGain> equivalent_gains(
    const std::vector<IrLinkState>& states) {
  if (states.empty())
    throw std::invalid_argument("equivalent_gains: empty IR list");
  std::vector<EquivalentGain> gains;
  gains.reserve(states.size());
  for (const IrLinkState& s : states) {
    if (s.noise_mw <= 0.0)
      throw std::invalid_argument("equivalent_gains: noise must be positive");
    gains.push_back(
        {s.ir_id,
         s.channel_gain_linear / (s.external_interference_mw + s.noise_mw)});
  }
  return gains;
}

DecodingOrder decoding_order(const std::vector<EquivalentGain>& gains) {
  if (gains.empty())
    throw std::invalid_argument("decoding_order: empty gain list");
  std::vector<EquivalentGain> sorted = gains;
  std::sort(sorted.begin(), sorted.end(),
            [](const EquivalentGain& a, const EquivalentGain& b) {
              if (a.value != b.value) return a.value < b.value;
              return a.ir_id < b.ir_id;
            });
  DecodingOrder order;
  order.ir_ids.reserve(sorted.size());
  for (const EquivalentGain& g : sorted) order.ir_ids.push_back(g.ir_id);
  return order;
}

LinkReport cluster_sinr(const DecodingOrder& order,
                        const std::vector<IrLinkState>& states,
                        const PowerAllocation& alloc, double budget_mw) {
  const std::size_t n = states.size();
  if (order.ir_ids.size() != n || alloc.power_mw.size() != n)
    throw std::invalid_argument(
        "cluster_sinr: order/state/allocation sizes disagree");

  // Map ir_id -> position in the state list; the order must mention each
  // state exactly once.
  std::vector<std::size_t> state_index(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const int id = order.ir_ids[pos];
    auto it = std::find_if(states.begin(), states.end(),
                           [id](const IrLinkState& s) { return s.ir_id == id; });
    if (it == states.end())
      throw std::invalid_argument(
          "cluster_sinr: decoding order names an unknown ir_id");
    state_index[pos] = static_cast<std::size_t>(it - states.begin());
  }

  double total_mw = 0.0;
  for (double p : alloc.power_mw) {
    if (p < 0.0)
      throw std::invalid_argument("cluster_sinr: negative allocated power");
    total_mw += p;
  }
  if (budget_mw >= 0.0 && total_mw > budget_mw * (1.0 + 1e-12))
    throw std::invalid_argument(
        "cluster_sinr: allocation exceeds the cluster power budget");

  LinkReport report;
  report.irs.resize(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    const IrLinkState& s = states[state_index[pos]];
    double intra_mw = 0.0;
    for (std::size_t later = pos + 1; later < n; ++later)
      intra_mw += alloc.power_mw[state_index[later]];
    const double signal = s.channel_gain_linear *
                          alloc.power_mw[state_index[pos]];
    const double denom = s.channel_gain_linear * intra_mw +
                         s.external_interference_mw + s.noise_mw;
    report.irs[state_index[pos]] = {s.ir_id, signal / denom, 0.0, false};
  }
  return report;
}

LinkReport rates_and_outage(LinkReport report, double bandwidth_hz,
                            double demand_bps) {
  if (bandwidth_hz <= 0.0)
    throw std::invalid_argument("rates_and_outage: bandwidth must be positive");
  for (IrLinkReport& ir : report.irs) {
    ir.rate_bps = bandwidth_hz * std::log2(1.0 + ir.sinr_linear);
    ir.outage = ir.rate_bps < demand_bps;
  }
  return report;
}

LinkReport oma_rates(const std::vector<IrLinkState>& states,
                     const PowerAllocation& alloc, double bandwidth_hz,
                     double demand_bps, double budget_mw) {
  const std::size_t n = states.size();
  if (n == 0) throw std::invalid_argument("oma_rates: empty IR list");
  if (alloc.power_mw.size() != n)
    throw std::invalid_argument("oma_rates: allocation size mismatch");
  if (bandwidth_hz <= 0.0)
    throw std::invalid_argument("oma_rates: bandwidth must be positive");

  double total_mw = 0.0;
  for (double p : alloc.power_mw) {
    if (p < 0.0)
      throw std::invalid_argument("oma_rates: negative allocated power");
    total_mw += p;
  }
  if (budget_mw >= 0.0 && total_mw > budget_mw * (1.0 + 1e-12))
    throw std::invalid_argument(
        "oma_rates: allocation exceeds the cluster power budget");

  const double share = 1.0 / static_cast<double>(n);
  LinkReport report;
  report.irs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const IrLinkState& s = states[i];
    const double sinr = s.channel_gain_linear * alloc.power_mw[i] /
                        (s.external_interference_mw + s.noise_mw * share);
    const double rate =
        bandwidth_hz * share * std::log2(1.0 + sinr);
    report.irs[i] = {s.ir_id, sinr, rate, rate < demand_bps};
  }
  return report;
}

double mqi(double t_total, const std::vector<double>& mission_times,
           const std::vector<double>& outage_durations, double lambda) {
  if (mission_times.size() != outage_durations.size())
    throw std::invalid_argument("mqi: mission/outage lists differ in length");
  double score = t_total;
  for (std::size_t i = 0; i < mission_times.size(); ++i)
    score -= mission_times[i] + lambda * outage_durations[i];
  return score;
}

}  // namespace irsim
