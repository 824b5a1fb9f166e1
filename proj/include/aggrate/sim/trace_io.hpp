#pragma once

#include <iosfwd>

#include "aggrate/sim/records.hpp"

namespace aggrate::sim {

/// One row per packet; times are integer microseconds, absent values empty.
void write_packets_csv(std::ostream& out, const Trace& trace);
void write_frames_csv(std::ostream& out, const Trace& trace);
void write_controller_log_csv(std::ostream& out, const Trace& trace);

/// Reads the packet CSV back. Frame-level columns are discarded.
std::vector<PacketRecord> read_packets_csv(std::istream& in);

}  // namespace aggrate::sim
