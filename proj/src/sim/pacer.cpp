#include "aggrate/sim/pacer.hpp"

#include <cmath>
#include <stdexcept>

namespace aggrate::sim {

Pacer::Pacer(double packet_bits, double rate, SimTime start) : bits_(packet_bits) {
  if (packet_bits <= 0) throw std::invalid_argument("Pacer: packet_bits must be positive");
  set_rate(rate, start);
}

SimTime Pacer::next() const {
  if (!std::isfinite(next_ns_)) return kNever;
  return static_cast<SimTime>(std::llround(next_ns_));
}

double Pacer::gap_ns() {
  const double mean = bits_ / rate_ * 1e9;
  return poisson_ ? poisson_->exponential(mean) : mean;
}

void Pacer::advance() {
  if (rate_ <= 0.0) return;
  next_ns_ += gap_ns();
}

void Pacer::make_poisson(Rng rng, SimTime now) {
  poisson_ = rng;
  if (rate_ > 0.0) next_ns_ = static_cast<double>(now) + gap_ns();
}

void Pacer::set_rate(double rate, SimTime now) {
  if (!(rate >= 0.0)) throw std::invalid_argument("Pacer: rate must be >= 0");
  if (rate == 0.0) {
    next_ns_ = std::numeric_limits<double>::infinity();
  } else if (!std::isfinite(next_ns_)) {
    rate_ = rate;
    next_ns_ = static_cast<double>(now) + (poisson_ ? gap_ns() : 0.0);
  }
  rate_ = rate;
}

std::vector<SimTime> enqueue_paced(double rate, double packet_bits, double start, double end,
                                   const std::vector<ScheduleStep>& changes) {
  std::vector<SimTime> out;
  Pacer pacer(packet_bits, rate, from_seconds(start));
  const SimTime stop = from_seconds(end);
  std::size_t step = 0;
  for (;;) {
    const SimTime next_change = step < changes.size() ? from_seconds(changes[step].at) : kNever;
    const SimTime t = pacer.next();
    if (next_change <= t && next_change < stop) {
      pacer.set_rate(changes[step].value, next_change);
      ++step;
      continue;
    }
    if (t >= stop) break;
    out.push_back(t);
    pacer.advance();
  }
  return out;
}

}  // namespace aggrate::sim
