#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hcpick/hash.hpp"
#include "hcpick/io.hpp"

using namespace hcpick;

namespace {

template <class K>
std::vector<PsPair<K>> some_pairs(int n) {
  std::mt19937_64 rng(1);
  std::vector<PsPair<K>> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_pair<K>(SceneConfig{}, rng));
  return out;
}

}  // namespace

TEST(Hash, KnownFnvVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ull);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ull);
  EXPECT_EQ(hex64(0xabcull), "0000000000000abc");
}

TEST(Hash, SettingsHashTracksEveryField) {
  const TrackSettings base;
  TrackSettings other = base;
  EXPECT_EQ(settings_hash(base), settings_hash(other));
  other.min_dt *= 2;
  EXPECT_NE(settings_hash(base), settings_hash(other));
  other = base;
  other.polish_iters += 1;
  EXPECT_NE(settings_hash(base), settings_hash(other));
  other = base;
  other.polish_floor = 0;
  EXPECT_NE(settings_hash(base), settings_hash(other));
}

TEST(Io, PairsRoundTripExactly) {
  const auto pairs = some_pairs<Scranton>(20);
  std::stringstream ss;
  write_pairs<Scranton>(ss, pairs, {{"seed", "7"}});
  HeaderFields f;
  const auto back = read_pairs<Scranton>(ss, &f);
  ASSERT_EQ(back.size(), pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_TRUE((back[i].problem.array() == pairs[i].problem.array()).all());
    EXPECT_TRUE((back[i].solution.array() == pairs[i].solution.array()).all());
  }
  EXPECT_EQ(f.at("seed"), "7");
}

TEST(Io, EmptyPairsFileHasValidHeader) {
  std::stringstream ss;
  write_pairs<FivePoint>(ss, {});
  EXPECT_EQ(ss.str(), "PAIRS 5pt 0\n");
  EXPECT_TRUE(read_pairs<FivePoint>(ss).empty());
}

TEST(Io, PairsErrors) {
  std::stringstream wrong_kind;
  write_pairs<FivePoint>(wrong_kind, some_pairs<FivePoint>(1));
  EXPECT_THROW(read_pairs<Scranton>(wrong_kind), ParseError);

  std::stringstream truncated("PAIRS 5pt 2\nP 1 2 3\n");
  EXPECT_THROW(read_pairs<FivePoint>(truncated), ParseError);

  std::stringstream bad_magic("PAIRZ 5pt 0\n");
  EXPECT_THROW(read_pairs<FivePoint>(bad_magic), ParseError);

  std::stringstream bad_count("PAIRS 5pt -3\n");
  EXPECT_THROW(read_pairs<FivePoint>(bad_count), ParseError);

  std::stringstream bad_number("PAIRS 5pt 1\nP 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 0 x\n");
  EXPECT_THROW(read_pairs<FivePoint>(bad_number), ParseError);
}

TEST(Io, AnchorsRoundTrip) {
  AnchorSet<FivePoint> a;
  a.anchors = some_pairs<FivePoint>(3);
  a.node_index = {4, 0, 9};
  a.coverage = 0.123456789012345678;
  a.source = "train.pairs";
  a.settings_hash = settings_hash(TrackSettings{});
  std::stringstream ss;
  write_anchors(ss, a);
  EXPECT_EQ(ss.str().rfind("ANCHORS 5pt 3 " + hex64(a.settings_hash), 0), 0u);
  const auto b = read_anchors<FivePoint>(ss);
  EXPECT_EQ(b.node_index, a.node_index);
  EXPECT_EQ(b.coverage, a.coverage);
  EXPECT_EQ(b.source, a.source);
  EXPECT_EQ(b.settings_hash, a.settings_hash);
  ASSERT_EQ(b.size(), 3u);
  EXPECT_TRUE((b.anchors[2].solution.array() == a.anchors[2].solution.array()).all());
}

TEST(Io, MlpRoundTripGivesIdenticalScores) {
  const MlpModel m = make_mlp(Kind::Scranton, 24, 6, 3, 10, 2);
  std::stringstream ss;
  write_mlp(ss, m, {{"seed", "3"}});
  const MlpModel back = read_mlp(ss);
  EXPECT_EQ(back.kind, Kind::Scranton);
  EXPECT_EQ(back.n_anchors, 6);
  ASSERT_EQ(back.layers.size(), 3u);
  EXPECT_FALSE(back.layers.back().has_activation());
  const VectorXd x = VectorXd::LinSpaced(24, -1, 1);
  EXPECT_TRUE((infer(back, x).array() == infer(m, x).array()).all());
}

TEST(Io, MlpRejectsBrokenChain) {
  std::stringstream ss("MLP 5pt 1 2\nL 2 3\nW 1 2 3\nW 1 2 3\nB 0 0\nA 0.25 0.25\nL 2 4\nW 1 1 1 1\nW 1 1 1 1\nB 0 0\nA\n");
  EXPECT_THROW(read_mlp(ss), ShapeError);
}

TEST(Io, MatchesRoundTripWithGroundTruth) {
  std::mt19937_64 rng(2);
  MatchSynthConfig mc;
  mc.n_matches = 30;
  const auto m = synth_matches<Scranton>(mc, rng);
  std::stringstream ss;
  write_matches(ss, m);
  const auto back = read_matches<Scranton>(ss);
  ASSERT_EQ(back.size(), 30u);
  ASSERT_EQ(back.gt.size(), 3u);
  for (std::size_t i = 0; i < 30; ++i)
    for (int v = 0; v < 3; ++v) EXPECT_EQ(back.points[i][v], m.points[i][v]);
  EXPECT_EQ(back.gt[2].R, m.gt[2].R);
  EXPECT_EQ(back.gt[2].t, m.gt[2].t);
}

TEST(Io, SceneRoundTripAndDefaultVisibility) {
  SceneConfig cfg;
  cfg.n_points = 12;
  cfg.n_cameras = 3;
  const SceneModel s = synth_scene(cfg, 4);
  std::stringstream ss;
  write_scene(ss, s);
  const SceneModel back = read_scene(ss);
  EXPECT_EQ(back.visibility, s.visibility);
  for (std::size_t i = 0; i < s.points.size(); ++i) EXPECT_EQ(back.points[i], s.points[i]);
  EXPECT_EQ(back.cameras[1].R, s.cameras[1].R);

  std::stringstream no_vis("SCENE 2 1\nP 0 0 5\nC 1 0 0 0 1 0 0 0 1 0 0 0\nP 0 0 -5\n");
  const SceneModel nv = read_scene(no_vis);
  EXPECT_TRUE(nv.visible(0, 0));
  EXPECT_FALSE(nv.visible(1, 0));

  std::stringstream short_scene("SCENE 2 1\nP 0 0 5\nC 1 0 0 0 1 0 0 0 1 0 0 0\n");
  EXPECT_THROW(read_scene(short_scene), ParseError);
  std::stringstream bad_edge("SCENE 1 1\nP 0 0 5\nC 1 0 0 0 1 0 0 0 1 0 0 0\nV 0 3\n");
  EXPECT_THROW(read_scene(bad_edge), ParseError);
}

TEST(Io, MissingFileReportsPath) {
  try {
    open_input("/nonexistent/dir/file.pairs");
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/file.pairs"), std::string::npos);
  }
}
