#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace aggrate::meter {

/// A received packet as seen by the client.
struct RxPacket {
  std::uint64_t seq = 0;
  std::int64_t mac_us = 0;
  std::int64_t host_us = 0;  // host clock; only used to split timestamp collisions
  double mcs_rate = 0.0;
};

struct ObservedFrame {
  std::int64_t mac_timestamp = 0;  // microseconds
  std::vector<std::uint64_t> received_seqs;
  int inferred_tx_count = 0;
  bool is_retx_inferred = false;
  double mcs_rate = 0.0;
  int fills = 0;       // seqs that closed earlier holes
  int new_seqs = 0;    // seqs above the running maximum
  int duplicates = 0;  // already received
  int holes = 0;       // holes attributed to this frame
  int open_holes = 0;  // of which still unfilled
  int unattributed = 0;  // losses that no frame had room for
};

/// Consecutive packets with equal MAC timestamps form one frame. Equal
/// timestamps whose host times differ by more than one second are split.
std::vector<ObservedFrame> cluster_by_mac_timestamp(std::span<const RxPacket> packets);

/// Streaming sequence book-keeping over frames of one flow (first seq is 1).
///
/// A frame with seqs above the running maximum and no retransmitted seqs is
/// a fresh frame: it is charged every seq in (previous max, new max],
/// received or not. Charges beyond n_max spill back to the two previous
/// fresh frames while they have room. A frame that closes holes (or carries only duplicates)
/// is a retransmission frame; any seqs above the maximum it carries are
/// charged to the previous fresh frame.
class SeqReconciler {
 public:
  explicit SeqReconciler(int n_max) : n_max_(n_max) {}

  /// Updates `frames[index]` (and possibly the previous fresh frame).
  void add(std::vector<ObservedFrame>& frames, std::size_t index);

  /// Charges seqs in (max, last_seq] that were never received.
  void finish(std::vector<ObservedFrame>& frames, std::uint64_t last_seq);

  std::uint64_t running_max() const { return max_; }
  std::size_t open_holes() const { return holes_.size(); }

 private:
  void charge(std::vector<ObservedFrame>& frames, std::optional<std::size_t> target,
              std::size_t origin, std::uint64_t lo, std::uint64_t hi,
              const std::vector<std::uint64_t>& received);

  int n_max_;
  std::uint64_t max_ = 0;
  std::map<std::uint64_t, std::size_t> holes_;  // seq -> owning frame
  std::optional<std::size_t> last_fresh_;
  std::optional<std::size_t> prev_fresh_;  // fresh frame before last_fresh_
};

std::vector<ObservedFrame> reconcile_seq(std::vector<ObservedFrame> frames, int n_max,
                                         std::optional<std::uint64_t> last_seq = std::nullopt);

struct FeedbackReport {
  std::uint32_t slot = 0;
  std::uint16_t station = 0;
  std::optional<double> mean_agg;
  double mean_mcs = 0.0;
  std::uint32_t frame_count = 0;  // fresh frames only
  double loss_fraction = 0.0;
};

/// One report per slot from slot 0 to the last slot holding a frame.
std::vector<FeedbackReport> slot_report(const std::vector<ObservedFrame>& frames, double delta,
                                        int station);

/// Per-station streaming meter. Reports for slot k become available once the
/// clock reaches (k+1)·delta.
class AggMeter {
 public:
  /// With keep_seqs=false frames() retains counts but not the seq lists.
  AggMeter(int station, double delta, int n_max, bool keep_seqs = false);

  void on_packet(const RxPacket& p);
  void on_frame(std::int64_t mac_us, std::span<const std::uint64_t> seqs, double mcs_rate);

  /// Reports for all slots that ended at or before `now_us`.
  std::vector<FeedbackReport> poll(std::int64_t now_us);

  void finish(std::uint64_t last_seq);

  const std::vector<ObservedFrame>& frames() const { return frames_; }
  double delta() const { return delta_; }

 private:
  void close_cluster();
  FeedbackReport build(std::uint32_t slot) const;

  int station_;
  double delta_;
  std::int64_t delta_us_;
  SeqReconciler reconciler_;
  std::vector<ObservedFrame> frames_;
  std::size_t slot_begin_ = 0;  // first frame of the next slot to report
  std::uint32_t next_slot_ = 0;
  std::optional<ObservedFrame> open_;
  std::int64_t open_host_us_ = 0;
  bool keep_seqs_ = false;
};

inline constexpr std::size_t kReportBytes = 26;

std::array<std::uint8_t, kReportBytes> encode_report(const FeedbackReport& r);
FeedbackReport decode_report(std::span<const std::uint8_t> bytes);

}  // namespace aggrate::meter
