#include "aggrate/meter/meter.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace aggrate::meter {

namespace {
constexpr std::int64_t kSplitGapUs = 1'000'000;
}

std::vector<ObservedFrame> cluster_by_mac_timestamp(std::span<const RxPacket> packets) {
  std::vector<ObservedFrame> frames;
  std::int64_t last_host = 0;
  for (const auto& p : packets) {
    const bool join = !frames.empty() && frames.back().mac_timestamp == p.mac_us &&
                      std::llabs(p.host_us - last_host) <= kSplitGapUs;
    if (!join) {
      ObservedFrame f;
      f.mac_timestamp = p.mac_us;
      f.mcs_rate = p.mcs_rate;
      frames.push_back(std::move(f));
    }
    frames.back().received_seqs.push_back(p.seq);
    last_host = p.host_us;
  }
  return frames;
}

void SeqReconciler::charge(std::vector<ObservedFrame>& frames, std::optional<std::size_t> target,
                           std::size_t origin, std::uint64_t lo, std::uint64_t hi,
                           const std::vector<std::uint64_t>& received) {
  if (hi <= lo) return;
  auto count = static_cast<std::int64_t>(hi - lo);
  const std::size_t owner = target.value_or(origin);
  // Holes: seqs in (lo, hi] not in `received` (sorted).
  std::size_t r = 0;
  int created = 0;
  for (std::uint64_t s = lo + 1; s <= hi; ++s) {
    while (r < received.size() && received[r] < s) ++r;
    if (r < received.size() && received[r] == s) continue;
    holes_.emplace(s, owner);
    ++created;
  }
  frames[owner].holes += created;
  frames[owner].open_holes += created;

  auto take = [&](std::size_t i) {
    auto& f = frames[i];
    const std::int64_t room = std::max(0, n_max_ - f.inferred_tx_count);
    const std::int64_t n = std::min(room, count);
    f.inferred_tx_count += static_cast<int>(n);
    count -= n;
  };
  // Overflow walks back over the last two fresh frames: a trailing loss of
  // one fresh frame is indistinguishable from a leading loss of the next.
  if (target) take(*target);
  if (count > 0 && target && last_fresh_ && *last_fresh_ != *target) take(*last_fresh_);
  if (count > 0 && target && prev_fresh_ && *prev_fresh_ != *target) take(*prev_fresh_);
  if (count > 0) frames[origin].unattributed += static_cast<int>(count);
}

void SeqReconciler::add(std::vector<ObservedFrame>& frames, std::size_t index) {
  auto& f = frames[index];
  auto seqs = f.received_seqs;
  std::sort(seqs.begin(), seqs.end());
  std::vector<std::uint64_t> fresh;
  f.fills = f.new_seqs = f.duplicates = 0;
  for (std::size_t i = 0; i < seqs.size(); ++i) {
    const auto s = seqs[i];
    if (i > 0 && seqs[i - 1] == s) {
      ++f.duplicates;
      continue;
    }
    if (s > max_) {
      fresh.push_back(s);
      ++f.new_seqs;
      continue;
    }
    auto it = holes_.find(s);
    if (it == holes_.end()) {
      ++f.duplicates;
      continue;
    }
    --frames[it->second].open_holes;
    holes_.erase(it);
    ++f.fills;
  }

  const std::uint64_t lo = max_;
  const std::uint64_t hi = fresh.empty() ? max_ : fresh.back();
  if (f.fills == 0 && !fresh.empty()) {
    f.is_retx_inferred = false;
    f.inferred_tx_count = 0;
    charge(frames, index, index, lo, hi, fresh);
    // Charges beyond n_max went to the previous fresh frame; never report
    // fewer packets than were received.
    frames[index].inferred_tx_count =
        std::max(frames[index].inferred_tx_count, static_cast<int>(frames[index].received_seqs.size()));
    prev_fresh_ = last_fresh_;
    last_fresh_ = index;
  } else {
    f.is_retx_inferred = true;
    f.inferred_tx_count = static_cast<int>(f.received_seqs.size());
    charge(frames, last_fresh_, index, lo, hi, fresh);
  }
  max_ = std::max(max_, hi);
}

void SeqReconciler::finish(std::vector<ObservedFrame>& frames, std::uint64_t last_seq) {
  if (last_seq <= max_) return;
  if (frames.empty()) {
    max_ = last_seq;
    return;
  }
  const std::size_t origin = last_fresh_.value_or(frames.size() - 1);
  charge(frames, last_fresh_, origin, max_, last_seq, {});
  max_ = last_seq;
}

std::vector<ObservedFrame> reconcile_seq(std::vector<ObservedFrame> frames, int n_max,
                                         std::optional<std::uint64_t> last_seq) {
  SeqReconciler r(n_max);
  for (std::size_t i = 0; i < frames.size(); ++i) r.add(frames, i);
  if (last_seq) r.finish(frames, *last_seq);
  return frames;
}

namespace {

struct SlotAccumulator {
  std::uint64_t fresh = 0;
  double agg_sum = 0.0;
  std::uint64_t all = 0;
  double mcs_sum = 0.0;
  double lost = 0.0;
  double total = 0.0;

  void add(const ObservedFrame& f) {
    ++all;
    mcs_sum += f.mcs_rate;
    lost += f.open_holes + f.unattributed;
    total += f.unattributed;
    if (!f.is_retx_inferred) {
      ++fresh;
      agg_sum += f.inferred_tx_count;
      total += f.inferred_tx_count;
    }
  }

  FeedbackReport report(std::uint32_t slot, int station) const {
    FeedbackReport r;
    r.slot = slot;
    r.station = static_cast<std::uint16_t>(station);
    r.frame_count = static_cast<std::uint32_t>(fresh);
    if (fresh > 0) r.mean_agg = agg_sum / static_cast<double>(fresh);
    r.mean_mcs = all ? mcs_sum / static_cast<double>(all) : 0.0;
    r.loss_fraction = total > 0 ? std::min(1.0, lost / total) : 0.0;
    return r;
  }
};

std::int64_t delta_micros(double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("slot length must be positive");
  return std::max<std::int64_t>(1, std::llround(delta * 1e6));
}

}  // namespace

std::vector<FeedbackReport> slot_report(const std::vector<ObservedFrame>& frames, double delta,
                                        int station) {
  const auto d = delta_micros(delta);
  std::vector<FeedbackReport> out;
  if (frames.empty()) return out;
  std::int64_t last = 0;
  for (const auto& f : frames) last = std::max(last, f.mac_timestamp / d);
  std::vector<SlotAccumulator> acc(static_cast<std::size_t>(last + 1));
  for (const auto& f : frames) acc[static_cast<std::size_t>(std::max<std::int64_t>(0, f.mac_timestamp / d))].add(f);
  for (std::size_t k = 0; k < acc.size(); ++k) out.push_back(acc[k].report(static_cast<std::uint32_t>(k), station));
  return out;
}

AggMeter::AggMeter(int station, double delta, int n_max, bool keep_seqs)
    : station_(station),
      delta_(delta),
      delta_us_(delta_micros(delta)),
      reconciler_(n_max),
      keep_seqs_(keep_seqs) {}

void AggMeter::close_cluster() {
  if (!open_) return;
  frames_.push_back(std::move(*open_));
  open_.reset();
  reconciler_.add(frames_, frames_.size() - 1);
  if (!keep_seqs_) frames_.back().received_seqs = {};
}

void AggMeter::on_packet(const RxPacket& p) {
  if (open_ && open_->mac_timestamp == p.mac_us && std::llabs(p.host_us - open_host_us_) <= kSplitGapUs) {
    open_->received_seqs.push_back(p.seq);
  } else {
    close_cluster();
    ObservedFrame f;
    f.mac_timestamp = p.mac_us;
    f.mcs_rate = p.mcs_rate;
    f.received_seqs.push_back(p.seq);
    open_ = std::move(f);
  }
  open_host_us_ = p.host_us;
}

void AggMeter::on_frame(std::int64_t mac_us, std::span<const std::uint64_t> seqs, double mcs_rate) {
  if (seqs.empty()) return;
  close_cluster();
  ObservedFrame f;
  f.mac_timestamp = mac_us;
  f.mcs_rate = mcs_rate;
  f.received_seqs.assign(seqs.begin(), seqs.end());
  frames_.push_back(std::move(f));
  reconciler_.add(frames_, frames_.size() - 1);
  if (!keep_seqs_) frames_.back().received_seqs = {};
}

FeedbackReport AggMeter::build(std::uint32_t slot) const {
  SlotAccumulator acc;
  const std::int64_t lo = static_cast<std::int64_t>(slot) * delta_us_;
  const std::int64_t hi = lo + delta_us_;
  for (std::size_t i = slot_begin_; i < frames_.size(); ++i) {
    const auto t = frames_[i].mac_timestamp;
    if (t >= hi) break;
    if (t >= lo) acc.add(frames_[i]);
  }
  return acc.report(slot, station_);
}

std::vector<FeedbackReport> AggMeter::poll(std::int64_t now_us) {
  close_cluster();
  std::vector<FeedbackReport> out;
  while ((static_cast<std::int64_t>(next_slot_) + 1) * delta_us_ <= now_us) {
    out.push_back(build(next_slot_));
    ++next_slot_;
    const std::int64_t lo = static_cast<std::int64_t>(next_slot_) * delta_us_;
    while (slot_begin_ < frames_.size() && frames_[slot_begin_].mac_timestamp < lo) ++slot_begin_;
  }
  return out;
}

void AggMeter::finish(std::uint64_t last_seq) {
  close_cluster();
  reconciler_.finish(frames_, last_seq);
}

namespace {

template <typename T>
void put(std::uint8_t*& p, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) *p++ = static_cast<std::uint8_t>(static_cast<std::uint64_t>(v) >> (8 * i));
}

template <typename T>
T get(const std::uint8_t*& p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
  return static_cast<T>(v);
}

}  // namespace

std::array<std::uint8_t, kReportBytes> encode_report(const FeedbackReport& r) {
  std::array<std::uint8_t, kReportBytes> out{};
  std::uint8_t* p = out.data();
  put<std::uint32_t>(p, r.slot);
  put<std::uint16_t>(p, r.station);
  const double agg = r.mean_agg ? std::max(0.0, *r.mean_agg) : 0.0;
  put<std::uint32_t>(p, static_cast<std::uint32_t>(std::llround(agg * 100.0)));
  put<std::uint64_t>(p, static_cast<std::uint64_t>(std::llround(std::max(0.0, r.mean_mcs))));
  put<std::uint32_t>(p, r.frame_count);
  put<std::uint32_t>(p, static_cast<std::uint32_t>(std::llround(std::clamp(r.loss_fraction, 0.0, 1.0) * 1e6)));
  return out;
}

FeedbackReport decode_report(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kReportBytes) throw std::invalid_argument("feedback report: expected 26 bytes");
  const std::uint8_t* p = bytes.data();
  FeedbackReport r;
  r.slot = get<std::uint32_t>(p);
  r.station = get<std::uint16_t>(p);
  const auto agg = get<std::uint32_t>(p);
  if (agg != 0) r.mean_agg = agg / 100.0;
  r.mean_mcs = static_cast<double>(get<std::uint64_t>(p));
  r.frame_count = get<std::uint32_t>(p);
  r.loss_fraction = get<std::uint32_t>(p) / 1e6;
  return r;
}

}  // namespace aggrate::meter
