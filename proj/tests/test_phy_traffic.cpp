#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cbsnr/phy.hpp"
#include "cbsnr/traffic.hpp"

using namespace cbsnr;

TEST(PhyTable, ShippedFileMatchesBuiltIn) {
  const auto t = PhyTable::load(std::string(CBSNR_DATA_DIR) + "/phy_default.txt");
  EXPECT_EQ(t.entries(), PhyTable().entries());
  EXPECT_EQ(t.bytes_per_rb(1), 3);
  EXPECT_EQ(t.bytes_per_rb(15), 48);
}

TEST(PhyTable, Lookup) {
  const PhyTable t;
  EXPECT_EQ(tbs_lookup(8, 5, t), 90);  // 18 B/RB
  EXPECT_EQ(tbs_lookup(8, 10, t), 180);
  EXPECT_EQ(tbs_lookup(3, 0, t), 0);
  EXPECT_THROW(t.bytes_per_rb(0), ConfigError);
  EXPECT_THROW(t.bytes_per_rb(16), ConfigError);
}

TEST(PhyTable, LoadErrorsNameThePath) {
  try {
    PhyTable::load("/nonexistent/table.txt");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/table.txt"), std::string::npos);
  }
  const std::string path = testing::TempDir() + "short_table.txt";
  {
    std::ofstream out(path);
    out << "1\n2\n3\n";
  }
  EXPECT_THROW(PhyTable::load(path), ConfigError);
  {
    std::ofstream out(path);
    for (int i = 15; i >= 1; --i) out << i << "\n";
  }
  EXPECT_THROW(PhyTable::load(path), ConfigError);  // decreasing
  std::remove(path.c_str());
}

TEST(Harq, BlockErrorDraws) {
  RngStream rng(7, 0, RngStream::Purpose::Harq);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(draw_block_error(rng, 1, 0.0, 0.0));
  for (int i = 0; i < 1000; ++i) EXPECT_TRUE(draw_block_error(rng, 1, 1.0, 0.0));
  EXPECT_EQ(rng.draws(), 2000u);
  for (int i = 0; i < 1000; ++i) EXPECT_FALSE(draw_block_error(rng, 2, 1.0, 0.0));  // retx rate applies
}

TEST(Harq, NackFractionWithinBinomialBand) {
  RngStream rng(99, 3, RngStream::Purpose::Harq);
  const int n = 100'000;
  int nacks = 0;
  for (int i = 0; i < n; ++i) nacks += draw_block_error(rng, 1, 0.1, 0.01) ? 1 : 0;
  const double sigma = std::sqrt(0.1 * 0.9 / n);
  EXPECT_NEAR(static_cast<double>(nacks) / n, 0.1, 3 * sigma);
}

TEST(Harq, FeedbackTransitions) {
  HarqProcess p;
  p.state = HarqState::InFlight;
  p.attempts = 1;
  EXPECT_EQ(on_feedback(p, false, 10, 2), FeedbackOutcome::Retx);
  EXPECT_EQ(p.state, HarqState::AwaitRetx);
  EXPECT_EQ(p.nack_slot, 10);
  p.state = HarqState::InFlight;
  p.attempts = 3;
  EXPECT_EQ(on_feedback(p, false, 20, 2), FeedbackOutcome::Drop);
  p.state = HarqState::InFlight;
  p.attempts = 1;
  EXPECT_EQ(on_feedback(p, false, 20, 0), FeedbackOutcome::Drop);
  p.state = HarqState::InFlight;
  EXPECT_EQ(on_feedback(p, true, 21, 3), FeedbackOutcome::Ack);
  p.state = HarqState::Free;
  EXPECT_THROW(on_feedback(p, true, 22, 3), InvariantError);
}

TEST(Traffic, Degenerate) {
  OnOffSource always(100, 1.0, 20, 0, RngStream(1, 0, RngStream::Purpose::Traffic));
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(always.step().value_or(0), 100);
  OnOffSource never(100, 0.0, 20, 20, RngStream(1, 0, RngStream::Purpose::Traffic));
  for (int i = 0; i < 10'000; ++i) ASSERT_FALSE(never.step().has_value());
}

TEST(Traffic, LongRunRateMatchesConfiguredRate) {
  // q=0.9 with equal ON/OFF means: 0.45 packets per slot
  OnOffSource src(80, 0.9, 20, 20, RngStream(2024, 1, RngStream::Purpose::Traffic));
  const int slots = 1'000'000;
  long packets = 0;
  for (int i = 0; i < slots; ++i) packets += src.step().has_value() ? 1 : 0;
  EXPECT_NEAR(static_cast<double>(packets) / slots, 0.45, 0.45 * 0.01);
  EXPECT_DOUBLE_EQ(src.mean_rate(), 0.45 * 80);
}

TEST(Traffic, SameSeedSameArrivals) {
  OnOffSource a(160, 0.7, 10, 30, RngStream(5, 2, RngStream::Purpose::Traffic));
  OnOffSource b(160, 0.7, 10, 30, RngStream(5, 2, RngStream::Purpose::Traffic));
  OnOffSource c(160, 0.7, 10, 30, RngStream(5, 3, RngStream::Purpose::Traffic));
  int differ = 0;
  for (int i = 0; i < 100'000; ++i) {
    const auto x = a.step(), y = b.step(), z = c.step();
    ASSERT_EQ(x, y);
    differ += x != z;
  }
  EXPECT_GT(differ, 0);
}

TEST(Traffic, CalibrateScalesQ) {
  // nominal offered 4800 B/slot against 2400 B/slot capacity at rho 1: q halves
  const std::vector<Bytes> payloads{2400, 2400, 4800};
  const auto s = calibrate_load(payloads, 1.0, 0.5, 2400, 1.0, false);
  EXPECT_DOUBLE_EQ(s.q, 0.25);
  EXPECT_DOUBLE_EQ(s.offered_bytes_per_slot, 2400);
  EXPECT_DOUBLE_EQ(s.payload_factor, 1.0);
}

TEST(Traffic, OverloadNeedsPayloadScaling) {
  const std::vector<Bytes> payloads{80, 160, 240};
  EXPECT_THROW(calibrate_load(payloads, 0.5, 1.0, 1000, 4.0, false), ConfigError);
  const auto s = calibrate_load(payloads, 0.5, 1.0, 1000, 4.0, true);
  EXPECT_LE(s.q, 1.0);
  EXPECT_NEAR(s.offered_bytes_per_slot, 4000, 4000 * 0.01);
  // class payload ratios survive the scaling
  EXPECT_NEAR(static_cast<double>(s.payloads[2]) / s.payloads[0], 3.0, 0.02);
}
