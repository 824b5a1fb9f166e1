#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "aggrate/sim/records.hpp"
#include "aggrate/tsml/boundary.hpp"
#include "aggrate/tsml/noise.hpp"

namespace aggrate::tsml {

/// Single station, loss-free link, A-MSDU style aggregation limit.
struct TsCorpusConfig {
  double mcs_rate = 866.7e6;
  int n_max = 128;
  double duration = 2.0;  // seconds simulated per run
  double warmup = 0.2;    // frames ending earlier are discarded
  KernelNoiseParams noise;
};

struct TsRun {
  double rate = 0.0;
  std::uint64_t seed = 0;
  std::vector<sim::FrameRecord> frames;
  std::vector<KernelPacket> packets;

  std::vector<double> kernel_us() const;
  std::vector<int> labels() const;
};

/// Simulates a paced flow at `rate` and applies the kernel noise model.
TsRun simulate_ts_run(const TsCorpusConfig& config, double rate, std::uint64_t seed);

/// Ground-truth slot statistics from MAC frame completions.
std::vector<SlotStat> true_slot_stats(const TsRun& run, double slot_s = 0.1);

/// Slot statistics of the aggregation derived from `labels` (one per packet),
/// each estimated frame stamped with the kernel time of its first packet.
std::vector<SlotStat> predicted_slot_stats(const TsRun& run, std::span<const int> labels, int n_max,
                                           double slot_s = 0.1);

/// CSV: packet,kernel_us,label,frame, preceded by a `# rate=<bps> seed=<n>`
/// comment line.
void write_ts_csv(std::ostream& out, const TsRun& run);

/// Reads write_ts_csv output. Frames are rebuilt from the frame column with
/// n_agg = packets seen and no MAC times; throws on a malformed file.
TsRun read_ts_csv(std::istream& in);

/// Slot statistics of the true frames stamped, like the predictions, with the
/// kernel time of their first packet. Needs no MAC times.
std::vector<SlotStat> kernel_truth_slot_stats(const TsRun& run, double slot_s = 0.1);

}  // namespace aggrate::tsml
