#include "aggrate/harness/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace aggrate::harness {

double jain_index(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("jain_index: empty input");
  double sum = 0, sq = 0;
  for (double v : values) {
    if (!(v >= 0)) throw std::invalid_argument("jain_index: negative value");
    sum += v;
    sq += v * v;
  }
  if (sq == 0) throw std::invalid_argument("jain_index: all values are zero");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

MetricSummary summarize_stats(const sim::SimStats& stats, double t0, double t1) {
  MetricSummary m;
  m.window = t1 - t0;
  double delay_sum = 0, agg_sum = 0;
  std::uint64_t fresh = 0;
  sim::StationStats pooled;
  for (const auto& st : stats.stations) {
    const auto w = sim::summarize(st, t0, t1);
    const auto b = st.window(t0, t1);
    m.station_goodput.push_back(w.goodput);
    m.station_delay.push_back(w.mean_delay);
    m.station_agg.push_back(w.mean_agg);
    m.station_airtime.push_back(w.seconds > 0 ? w.payload_airtime / w.seconds : 0.0);
    m.goodput += w.goodput;
    m.sent += w.sent;
    m.delivered += w.delivered;
    m.drop_ap += w.drop_ap;
    m.drop_backhaul += w.drop_backhaul;
    m.drop_retry += w.drop_retry;
    delay_sum += b.delay_sum;
    agg_sum += static_cast<double>(b.agg_sum);
    fresh += b.frames - b.retx_frames;
    if (pooled.delay_hist.size() < st.delay_hist.size()) pooled.delay_hist.resize(st.delay_hist.size(), 0);
    for (std::size_t i = 0; i < st.delay_hist.size(); ++i) pooled.delay_hist[i] += st.delay_hist[i];
  }
  m.mean_delay = m.delivered ? delay_sum / static_cast<double>(m.delivered) : 0.0;
  m.mean_agg = fresh ? agg_sum / static_cast<double>(fresh) : 0.0;
  m.p50_delay = pooled.delay_quantile(0.5);
  m.p95_delay = pooled.delay_quantile(0.95);
  m.p99_delay = pooled.delay_quantile(0.99);
  const bool any = std::any_of(m.station_goodput.begin(), m.station_goodput.end(), [](double g) { return g > 0; });
  m.jain = any ? jain_index(m.station_goodput) : 1.0;
  return m;
}

namespace {
std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
}  // namespace

std::string summary_csv_header() {
  return "scenario,hash,seed,axis_value,window,goodput,mean_delay,p50_delay,p95_delay,p99_delay,mean_agg,"
         "jain,theory_goodput,sent,delivered,drop_ap,drop_backhaul,drop_retry,converged,time_to_target,"
         "agg_std,controlled_mean_agg,f1,rmse";
}

std::string summary_csv_row(const MetricSummary& m, const std::string& axis_value) {
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(m.hash));
  std::ostringstream o;
  o << m.scenario << ',' << hash << ',' << m.seed << ',' << axis_value << ',' << num(m.window) << ','
    << num(m.goodput) << ',' << num(m.mean_delay) << ',' << num(m.p50_delay) << ',' << num(m.p95_delay) << ','
    << num(m.p99_delay) << ',' << num(m.mean_agg) << ',' << num(m.jain) << ',' << num(m.theory_goodput) << ','
    << m.sent << ',' << m.delivered << ',' << m.drop_ap << ',' << m.drop_backhaul << ',' << m.drop_retry << ','
    << (m.converged ? 1 : 0) << ',' << num(m.time_to_target) << ',' << num(m.agg_std) << ','
    << num(m.controlled_mean_agg) << ',' << num(m.f1) << ',' << num(m.rmse);
  return o.str();
}

}  // namespace aggrate::harness
