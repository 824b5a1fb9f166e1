#include "aggrate/tsml/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>


namespace aggrate::tsml {

void validate(const KernelNoiseParams& p) {
  if (!(p.per_packet_us > 0)) throw std::invalid_argument("noise.per_packet_us must be > 0");
  if (p.jitter_us < 0 || p.irq_latency_us < 0 || p.irq_jitter_us < 0 || p.poll_wake_us < 0 || p.poll_wake_jitter_us < 0)
    throw std::invalid_argument("noise: latencies must be >= 0");
  if (!(p.interrupt_max_pps >= 0) || p.polling_min_pps < p.interrupt_max_pps)
    throw std::invalid_argument("noise: need 0 <= interrupt_max_pps <= polling_min_pps");
  if (p.poll_budget < 1) throw std::invalid_argument("noise.poll_budget must be >= 1");
  if (p.poll_gap_min_us < 0 || p.poll_gap_mean_us < p.poll_gap_min_us)
    throw std::invalid_argument("noise: need 0 <= poll_gap_min_us <= poll_gap_mean_us");
  if (!(p.load_window_s > 0)) throw std::invalid_argument("noise.load_window_s must be > 0");
}

std::vector<KernelPacket> kernel_noise(std::span<const sim::FrameRecord> frames, const KernelNoiseParams& p,
                                       Rng& rng) {
  validate(p);
  std::vector<KernelPacket> out;
  auto draw = [&](double fixed, double mean) { return fixed + (mean > 0 ? rng.exponential(mean) : 0.0); };
  double host_free = -1e300;  // timestamp of the previous packet
  int used = 0;               // packets handled in the current poll
  double rate = 0.0;          // pps estimate
  double last_t = 0.0;
  const double tau = p.load_window_s * 1e6;

  for (std::size_t f = 0; f < frames.size(); ++f) {
    const auto& fr = frames[f];
    const int n = fr.n_agg - fr.n_lost;
    const double t = static_cast<double>(fr.t_end) / 1e3;
    if (f > 0 && t < last_t) throw std::invalid_argument("kernel_noise: frames must be time-ordered");
    // Exponentially decayed packet count over tau estimates the rate.
    if (f > 0) rate *= std::exp(-(t - last_t) / tau);
    last_t = t;
    if (n <= 0) continue;
    rate += n * 1e6 / tau;

    double pp = 0.0;
    if (rate >= p.polling_min_pps) pp = 1.0;
    else if (rate > p.interrupt_max_pps) pp = (rate - p.interrupt_max_pps) / (p.polling_min_pps - p.interrupt_max_pps);
    const bool polled = pp >= 1.0 || (pp > 0.0 && rng.bernoulli(pp));

    for (int k = 0; k < n; ++k) {
      double start;
      if (host_free < t) {
        start = t + (polled ? draw(p.poll_wake_us, p.poll_wake_jitter_us) : draw(p.irq_latency_us, p.irq_jitter_us));
        used = 0;
      } else if (polled && used >= p.poll_budget) {
        start = host_free + draw(p.poll_gap_min_us, p.poll_gap_mean_us - p.poll_gap_min_us);
        used = 0;
      } else {
        start = host_free;
      }
      host_free = start + draw(p.per_packet_us, p.jitter_us);
      ++used;
      out.push_back({host_free, static_cast<std::int64_t>(f), t, k == 0});
    }
  }
  return out;
}

}  // namespace aggrate::tsml
