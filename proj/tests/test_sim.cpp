#include <algorithm>
#include <cmath>
#include <sstream>

#include "aggrate/common/error.hpp"
#include "aggrate/sim/backhaul.hpp"
#include "aggrate/sim/mac.hpp"
#include "aggrate/sim/pacer.hpp"
#include "aggrate/sim/simulator.hpp"
#include "aggrate/sim/trace_io.hpp"
#include "doctest.h"

using namespace aggrate;
using namespace aggrate::sim;

namespace {

SimConfig one_station(double rate, double mcs = 780e6) {
  SimConfig c;
  StationConfig s;
  s.mcs_rate = mcs;
  s.send_rate = rate;
  c.stations.push_back(s);
  return c;
}

double mean_fresh_agg(const Trace& t) {
  double sum = 0;
  int n = 0;
  for (const auto& f : t.frames) {
    if (f.is_retx) continue;
    sum += f.n_agg;
    ++n;
  }
  return n ? sum / n : 0.0;
}

std::string dump(const Trace& t) {
  std::ostringstream os;
  write_packets_csv(os, t);
  write_frames_csv(os, t);
  return os.str();
}

}  // namespace

TEST_CASE("frame airtime") {
  CHECK(frame_airtime(32, 12000, 390e6, 100e-6) == doctest::Approx(100e-6 + 32 * 12000 / 390e6));
  CHECK(frame_airtime(32, 12000, 390e6, 100e-6) * 1e6 == doctest::Approx(1084.6).epsilon(1e-4));
  const double p1 = frame_airtime(10, 12000, 390e6, 0.0);
  const double p2 = frame_airtime(20, 12000, 390e6, 0.0);
  CHECK(p2 == doctest::Approx(2 * p1));
  CHECK(frame_airtime(20, 12000, 390e6, 0.0) == doctest::Approx(frame_airtime(10, 12000, 195e6, 0.0)));
  CHECK_THROWS(frame_airtime(0, 12000, 390e6, 0.0));
}

TEST_CASE("channel access interval") {
  AccessParams p;
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double v = channel_access_interval(1, p, rng);
    CHECK(v >= p.difs - 1e-12);
    CHECK(v <= p.difs + 15 * p.slot_time + 1e-12);
  }
  double m1 = 0, m2 = 0;
  Rng a(11), b(11);
  for (int i = 0; i < 10000; ++i) {
    m1 += channel_access_interval(1, p, a);
    m2 += channel_access_interval(2, p, b);
  }
  CHECK(m2 >= m1);
  Rng x(3), y(3);
  for (int i = 0; i < 100; ++i) CHECK(channel_access_interval(3, p, x) == channel_access_interval(3, p, y));
}

TEST_CASE("theoretical goodput anchors") {
  GoodputQuery q;
  q.n_eps = 32;
  q.mcs_rate_per_stream = 390e6;
  q.nss = 1;
  CHECK(std::abs(theoretical_goodput(q) - 307e6) <= 5e6);
  q.nss = 2;
  const double g32 = theoretical_goodput(q);
  q.n_eps = 64;
  const double g64 = theoretical_goodput(q);
  CHECK(std::abs(g64 - 615e6) <= 0.05 * 615e6);
  CHECK(std::abs(g32 - 515e6) <= 0.05 * 515e6);
  double prev = 0;
  for (int n = 1; n <= 64; ++n) {
    q.n_eps = n;
    const double g = theoretical_goodput(q);
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("assemble frame") {
  StationQueue q;
  for (int i = 0; i < 5; ++i) q.fresh.push_back(QueuedPacket{static_cast<std::uint64_t>(i + 1)});
  auto f = assemble_frame(q, 64);
  CHECK(f.packets.size() == 5);
  CHECK(q.empty());
  CHECK_FALSE(f.is_retx);
  for (int i = 0; i < 70; ++i) q.fresh.push_back(QueuedPacket{static_cast<std::uint64_t>(i + 1)});
  f = assemble_frame(q, 64);
  CHECK(f.packets.size() == 64);
  CHECK(q.fresh.size() == 6);
}

TEST_CASE("loss and retransmission") {
  Rng rng(5);
  StationQueue q;
  AssembledFrame f;
  for (int i = 0; i < 20; ++i) f.packets.push_back(QueuedPacket{static_cast<std::uint64_t>(i + 1)});
  auto out = apply_loss_and_retx(f, 0.0, 7, rng, q);
  CHECK(out.delivered.size() == 20);
  CHECK(q.retx.empty());

  // Five lost packets come back as a dedicated retx frame, in order.
  for (int i = 0; i < 5; ++i) q.retx.push_back(QueuedPacket{static_cast<std::uint64_t>(3 + i), 0, 0, 1});
  for (int i = 0; i < 10; ++i) q.fresh.push_back(QueuedPacket{static_cast<std::uint64_t>(30 + i)});
  auto next = assemble_frame(q, 64);
  CHECK(next.is_retx);
  REQUIRE(next.packets.size() == 5);
  for (int i = 0; i < 5; ++i) CHECK(next.packets[static_cast<std::size_t>(i)].seq == static_cast<std::uint64_t>(3 + i));

  StationQueue q2;
  AssembledFrame g;
  for (int i = 0; i < 8; ++i) g.packets.push_back(QueuedPacket{static_cast<std::uint64_t>(i + 1)});
  int transmissions = 0;
  std::size_t dropped = 0;
  auto pending = g;
  while (!pending.packets.empty()) {
    auto r = apply_loss_and_retx(pending, 1.0, 4, rng, q2);
    ++transmissions;
    dropped += r.dropped.size();
    pending = assemble_frame(q2, 64);
  }
  CHECK(transmissions == 5);
  CHECK(dropped == 8);
}

TEST_CASE("paced sources") {
  auto t = enqueue_paced(12e6, 12000, 0.0, 0.01);
  REQUIRE(t.size() == 10);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(t[i] - t[i - 1] == 1'000'000);
  CHECK(enqueue_paced(0.0, 12000, 0.0, 1.0).empty());

  // 12 Mb/s until 20.0005 s, then 24 Mb/s. The send pending at the change
  // (20.001 s) keeps its slot; later ones are 0.5 ms apart.
  auto u = enqueue_paced(12e6, 12000, 20.0, 20.003, {{20.0005, 24e6}});
  REQUIRE(u.size() == 5);
  CHECK(u[0] == from_seconds(20.0));
  CHECK(u[1] == from_seconds(20.001));
  CHECK(u[2] == from_seconds(20.0015));
  CHECK(u[3] == from_seconds(20.002));
  CHECK(u[4] == from_seconds(20.0025));
}

TEST_CASE("backhaul link") {
  BackhaulConfig c;
  c.enabled = true;
  c.link_rate = 1e9;
  BackhaulLink under(c);
  int drops = 0;
  for (auto t : enqueue_paced(100e6, 12000, 0.0, 1.0)) {
    const auto d = under.transit(t, 12000);
    if (!d) ++drops;
    else CHECK(*d - t == from_seconds(12304 / 1e9));
  }
  CHECK(drops == 0);

  c.link_rate = 100e6;
  BackhaulLink over(c);
  std::uint64_t offered = 0, dropped = 0;
  for (auto t : enqueue_paced(200e6, 12000, 0.0, 2.0)) {
    const bool late = t > from_seconds(0.5);
    if (!over.transit(t, 12000) && late) ++dropped;
    if (late) ++offered;
  }
  // Fluid limit: accepted share is capacity / offered load in packets.
  const double expect = 1.0 - (100e6 / 12304.0) / (200e6 / 12000.0);
  CHECK(static_cast<double>(dropped) / offered == doctest::Approx(expect).epsilon(0.01));
}

TEST_CASE("config validation") {
  auto c = one_station(10e6);
  CHECK_NOTHROW(validate(c, 1.0));
  c.stations[0].mcs_rate = -1;
  try {
    validate(c, 1.0);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "station[0].mcs_rate");
  }
  c = one_station(10e6);
  c.stations[0].rate_schedule = {{5.0, 1e6}};
  CHECK_THROWS_AS(validate(c, 1.0), ConfigError);
  c = one_station(10e6);
  c.ap.n_max = 50;
  CHECK_THROWS_AS(validate(c, 1.0), ConfigError);
}

TEST_CASE("zero send rate gives no frames") {
  auto t = run_scenario(one_station(0.0), 1.0, 1);
  CHECK(t.frames.empty());
  CHECK(t.packets.empty());
}

TEST_CASE("determinism") {
  auto c = one_station(300e6);
  c.ap.per_packet_error_prob = 0.05;
  c.contenders.push_back(ContenderConfig{500e-6, 0.01, 0.02});
  CHECK(dump(run_scenario(c, 0.5, 42)) == dump(run_scenario(c, 0.5, 42)));
  CHECK(dump(run_scenario(c, 0.5, 42)) != dump(run_scenario(c, 0.5, 43)));
}

TEST_CASE("low rate sends one packet per frame") {
  auto t = run_scenario(one_station(10e6), 2.0, 1);
  CHECK(mean_fresh_agg(t) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("two stations at 200 Mb/s aggregate about 10 packets") {
  SimConfig c;
  for (int i = 0; i < 2; ++i) {
    StationConfig s;
    s.mcs_rate = 1170e6;
    s.send_rate = 200e6;
    c.stations.push_back(s);
  }
  auto t = run_scenario(c, 2.0, 1);
  const double m = mean_fresh_agg(t);
  CHECK(m >= 6.0);
  CHECK(m <= 14.0);
}

TEST_CASE("conservation and record invariants") {
  auto c = one_station(500e6, 390e6);
  c.ap.per_packet_error_prob = 0.2;
  c.ap.retry_limit = 2;
  c.backhaul.enabled = true;
  c.backhaul.link_rate = 1e9;
  c.backhaul.cross_rate = 600e6;
  c.stations[0].rate_schedule = {{0.8, 0.0}};
  auto t = run_scenario(c, 1.5, 9);
  REQUIRE(!t.packets.empty());
  std::uint64_t delivered = 0, bh = 0, ap = 0, retry = 0;
  for (std::size_t i = 0; i < t.packets.size(); ++i) {
    const auto& p = t.packets[i];
    CHECK(p.seq == i + 1);
    if (p.dropped) {
      CHECK_FALSE(p.t_mac_rx_us.has_value());
      if (p.drop_reason == DropReason::Backhaul) ++bh;
      if (p.drop_reason == DropReason::ApQueue) ++ap;
      if (p.drop_reason == DropReason::RetryExhausted) ++retry;
    } else {
      REQUIRE(p.t_mac_rx_us.has_value());
      CHECK(p.t_send <= p.t_ap_arrival);
      CHECK(to_micros(p.t_ap_arrival) <= *p.t_mac_rx_us);
      ++delivered;
    }
  }
  CHECK(delivered + bh + ap + retry == t.packets.size());
  CHECK(bh > 0);
  CHECK(retry > 0);
  for (std::size_t i = 1; i < t.frames.size(); ++i) {
    CHECK(t.frames[i].t_start >= t.frames[i - 1].t_end);
    CHECK(t.frames[i].n_agg >= 1);
    CHECK(t.frames[i].n_agg <= 64);
  }
}

TEST_CASE("per-station isolation") {
  SimConfig c;
  StationConfig a;
  a.mcs_rate = 390e6;
  a.send_rate = 600e6;
  StationConfig b;
  b.mcs_rate = 780e6;
  b.send_rate = 20e6;
  c.stations = {a, b};
  auto t = run_scenario(c, 2.0, 3);
  std::uint64_t drops_a = 0, drops_b = 0;
  for (const auto& p : t.packets) {
    if (!p.dropped) continue;
    (p.station == 0 ? drops_a : drops_b)++;
  }
  CHECK(drops_a > 0);
  CHECK(drops_b == 0);
}

TEST_CASE("trace csv round trip") {
  auto c = one_station(50e6);
  auto t = run_scenario(c, 0.2, 1);
  std::ostringstream os;
  write_packets_csv(os, t);
  std::istringstream is(os.str());
  auto back = read_packets_csv(is);
  REQUIRE(back.size() == t.packets.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].seq == t.packets[i].seq);
    CHECK(back[i].t_mac_rx_us == t.packets[i].t_mac_rx_us);
    CHECK(back[i].frame_id == t.packets[i].frame_id);
  }
}
