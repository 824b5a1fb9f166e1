#include "aggrate/sim/stats.hpp"

#include <algorithm>
#include <cmath>

namespace aggrate::sim {

namespace {
constexpr double kHistBin = 10e-6;
constexpr std::size_t kHistMaxBins = 1'000'000;

void add(StatsBucket& a, const StatsBucket& b) {
  a.sent += b.sent;
  a.delivered += b.delivered;
  a.drop_backhaul += b.drop_backhaul;
  a.drop_ap += b.drop_ap;
  a.drop_retry += b.drop_retry;
  a.frames += b.frames;
  a.retx_frames += b.retx_frames;
  a.agg_sum += b.agg_sum;
  a.delay_sum += b.delay_sum;
  a.payload_airtime += b.payload_airtime;
  a.goodput_bits += b.goodput_bits;
}
}  // namespace

StatsBucket& StationStats::at(double t) {
  const auto k = static_cast<std::size_t>(std::max(0.0, std::floor(t / bucket_len + 1e-9)));
  if (k >= buckets.size()) buckets.resize(k + 1);
  return buckets[k];
}

void StationStats::record_delay(double now, double seconds) {
  if (now < hist_from) return;
  auto bin = static_cast<std::size_t>(std::max(0.0, seconds) / kHistBin);
  bin = std::min(bin, kHistMaxBins - 1);
  if (bin >= delay_hist.size()) delay_hist.resize(bin + 1, 0);
  ++delay_hist[bin];
}

StatsBucket StationStats::total() const {
  StatsBucket t;
  for (const auto& b : buckets) add(t, b);
  return t;
}

StatsBucket StationStats::window(double t0, double t1) const {
  StatsBucket t;
  for (std::size_t k = 0; k < buckets.size(); ++k) {
    const double start = static_cast<double>(k) * bucket_len;
    if (start + 1e-9 >= t0 && start + 1e-9 < t1) add(t, buckets[k]);
  }
  return t;
}

double StationStats::delay_quantile(double q) const {
  std::uint64_t n = 0;
  for (auto c : delay_hist) n += c;
  if (n == 0) return 0.0;
  const auto target = static_cast<std::uint64_t>(std::ceil(std::clamp(q, 0.0, 1.0) * n));
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < delay_hist.size(); ++i) {
    acc += delay_hist[i];
    if (acc >= std::max<std::uint64_t>(target, 1)) return (static_cast<double>(i) + 0.5) * kHistBin;
  }
  return static_cast<double>(delay_hist.size()) * kHistBin;
}

double StationStats::delay_max() const {
  for (std::size_t i = delay_hist.size(); i-- > 0;) {
    if (delay_hist[i] != 0) return (static_cast<double>(i) + 1.0) * kHistBin;
  }
  return 0.0;
}

WindowSummary summarize(const StationStats& stats, double t0, double t1) {
  const auto b = stats.window(t0, t1);
  WindowSummary s;
  s.seconds = std::max(0.0, t1 - t0);
  s.sent = b.sent;
  s.delivered = b.delivered;
  s.drop_ap = b.drop_ap;
  s.drop_backhaul = b.drop_backhaul;
  s.drop_retry = b.drop_retry;
  s.drops = b.drop_ap + b.drop_backhaul + b.drop_retry;
  s.goodput = s.seconds > 0 ? b.goodput_bits / s.seconds : 0.0;
  s.mean_delay = b.delivered ? b.delay_sum / b.delivered : 0.0;
  const auto fresh = b.frames - b.retx_frames;
  s.mean_agg = fresh ? static_cast<double>(b.agg_sum) / fresh : 0.0;
  s.payload_airtime = b.payload_airtime;
  s.frames = b.frames;
  return s;
}

}  // namespace aggrate::sim
