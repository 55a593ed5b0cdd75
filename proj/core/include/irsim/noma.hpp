#pragma once

#include <vector>

namespace irsim {

// Per-IR downlink state for one time slot, all in linear units:
// dimensionless channel power gain to the serving AP, external
// interference and noise in milliwatts.
struct IrLinkState {
  int ir_id = 0;
  double channel_gain_linear = 0.0;
  double external_interference_mw = 0.0;
  double noise_mw = 0.0;
};

struct EquivalentGain {
  int ir_id = 0;
  double value = 0.0;  // gain / (interference + noise), 1/mW
};

// Ascending equivalent gain; position 0 decodes first and suffers every
// later signal as intra-cluster interference.
struct DecodingOrder {
  std::vector<int> ir_ids;
};

struct PowerAllocation {
  std::vector<double> power_mw;  // indexed like the IrLinkState list
};

struct IrLinkReport {
  int ir_id = 0;
  double sinr_linear = 0.0;
  double rate_bps = 0.0;
  bool outage = false;
};

struct LinkReport {
  std::vector<IrLinkReport> irs;
};

// Equivalent channel gain per IR, order-preserving over the input list.
std::vector<EquivalentGain> equivalent_gains(
    const std::vector<IrLinkState>& states);

// Stable ascending sort by gain value, ties broken by ascending ir_id.
DecodingOrder decoding_order(const std::vector<EquivalentGain>& gains);

// Per-IR SINR under successive interference cancellation: the IR at order
// position u keeps only signals decoded after it as interference.
// `budget_mw` < 0 skips the sum-power check.
LinkReport cluster_sinr(const DecodingOrder& order,
                        const std::vector<IrLinkState>& states,
                        const PowerAllocation& alloc, double budget_mw);

// Fills rate = B*log2(1 + sinr) and outage = (rate < demand), in place.
LinkReport rates_and_outage(LinkReport report, double bandwidth_hz,
                            double demand_bps);

// Orthogonal baseline: each IR gets bandwidth/U and its allocated power
// with no intra-cluster interference; noise scales with the per-IR band.
LinkReport oma_rates(const std::vector<IrLinkState>& states,
                     const PowerAllocation& alloc, double bandwidth_hz,
                     double demand_bps, double budget_mw);

// Mission quality: t_total - sum(mission_time + lambda * outage_duration).
double mqi(double t_total, const std::vector<double>& mission_times,
           const std::vector<double>& outage_durations, double lambda);

}  // namespace irsim
