#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "aggrate/ml/logistic.hpp"
#include "aggrate/sim/config.hpp"

namespace aggrate::clf {

/// One measured flow (station 0) behind a rate-limited backhaul with
/// optional cross traffic and optional extra WLAN stations.
struct ClfScenario {
  double link_rate = 1e9;
  double send_rate = 100e6;
  double cross_rate = 0.0;
  std::vector<sim::ScheduleStep> cross_schedule;
  double duration = 1.0;
  std::vector<double> extra_rates;  // one extra station per entry
};

struct ClfCorpusConfig {
  double mcs_rate = 866.7e6;
  int n_max = 128;
  int queue_len = 100;  // backhaul FIFO, packets
  double warmup = 0.1;  // frames ending earlier are dropped
};

struct ClfFrame {
  double t_us = 0.0;  // MAC completion time
  int agg = 0;        // packets received in the frame
  std::vector<std::uint64_t> seqs;
  int label = 0;  // 1 when the send rate exceeds the available backhaul capacity
};

struct ClfTrace {
  ClfScenario scenario;
  std::uint64_t seed = 0;
  std::vector<ClfFrame> frames;
};

ClfTrace simulate_clf_trace(const ClfCorpusConfig& config, const ClfScenario& scenario, std::uint64_t seed);

struct ClfData {
  ml::Matrix x;
  ml::Vector y;
  std::vector<double> t_us;
};

ClfData clf_features(const ClfTrace& trace, int n, int p);
ClfData concat(const std::vector<ClfData>& parts);

/// 100 and 1000 Mb/s backhaul limits over a range of send rates (some past
/// the WLAN capacity), plus flows of 200-700 Mb/s sharing a gigabit link
/// with 600 Mb/s on/off cross traffic.
std::vector<ClfScenario> default_clf_scenarios();

/// CSV: frame,N_1..N_n,loss,label,t_us. A non-empty `comment` is written
/// first as a `# ` line.
void write_clf_csv(std::ostream& out, const ClfData& data, int n, const std::string& comment = "");

/// Reads write_clf_csv output. Throws on a malformed header or row; the
/// comment line, if any, is returned through `comment`.
ClfData read_clf_csv(std::istream& in, std::string* comment = nullptr);

/// "link=<bps> send=<bps> cross=<0|1>"
std::string describe(const ClfScenario& s);

}  // namespace aggrate::clf
