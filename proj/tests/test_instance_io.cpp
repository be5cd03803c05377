#include "z2sync/instance_io.hpp"
#include "z2sync/instances.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <string>

using namespace z2sync;

namespace {

bool instances_equal(const ProblemInstance& a, const ProblemInstance& b) {
  if (a.seed != b.seed) return false;
  if ((a.cost.entries().array() != b.cost.entries().array()).any()) return false;
  if (a.truth.has_value() != b.truth.has_value()) return false;
  if (a.truth && !(*a.truth == *b.truth)) return false;
  if (a.graph.has_value() != b.graph.has_value()) return false;
  if (a.graph && (a.graph->weights().array() != b.graph->weights().array()).any()) return false;
  return a.params.index() == b.params.index();
}

}  // namespace

TEST_CASE("instance serialization round-trips bit-exactly") {
  const auto gaussian = gen_gaussian(23, 1.75, 42);
  const auto erbern = gen_er_bernoulli(18, 0.37, 0.61, 43);
  const auto sbm = gen_sbm(20, 0.8, 0.15, SbmCentering::kKnownPQ, 44);
  const auto bumped = apply_monotone_adversary(gaussian, 1.3, 0.4, 45);
  for (const auto* inst : {&gaussian, &erbern, &sbm, &bumped}) {
    const auto text = serialize_instance(*inst);
    const auto back = parse_instance(text);
    REQUIRE(instances_equal(*inst, back));
    // Serialize again: byte-identical files.
    REQUIRE(serialize_instance(back) == text);
  }
}

TEST_CASE("model parameters survive the round trip") {
  const auto inst = gen_sbm(14, 0.625, 0.1251, SbmCentering::kMeanEstimate, 9);
  const auto back = parse_instance(serialize_instance(inst));
  const auto& params = std::get<SbmParams>(back.params);
  REQUIRE(params.p == 0.625);
  REQUIRE(params.q == 0.1251);
  REQUIRE(params.centering == SbmCentering::kMeanEstimate);
}

TEST_CASE("truncated files are rejected with the checksum field") {
  const auto text = serialize_instance(gen_gaussian(10, 0.5, 1));
  const auto truncated = text.substr(0, text.size() / 2);
  try {
    parse_instance(truncated);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "checksum");
  }
}

TEST_CASE("corrupted payload bytes are rejected") {
  auto text = serialize_instance(gen_gaussian(10, 0.5, 1));
  const auto pos = text.find("cost dense");
  auto line_end = text.find('\n', pos);
  // Flip one base64 character inside the payload.
  text[line_end + 5] = text[line_end + 5] == 'A' ? 'B' : 'A';
  try {
    parse_instance(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "checksum");
  }
}

TEST_CASE("asymmetric cost matrices are rejected as invariant violations") {
  Matrix bad(3, 3);
  bad << 0, 1, 2, 1, 0, 3, 2, 3.5, 0;  // (1,2) != (2,1)
  std::string text = "z2sync-instance v1\n";
  text += "model raw\n";
  text += "n 3\n";
  text += "seed 0\n";
  text += "cost dense 3 3\n";
  text += detail::encode_matrix(bad);
  detail::finish_with_checksum(text);
  try {
    parse_instance(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "cost");
  }
}

TEST_CASE("unknown fields and bad headers are rejected") {
  std::string text = "z2sync-instance v2\n";
  detail::finish_with_checksum(text);
  REQUIRE_THROWS_AS(parse_instance(text), FormatError);

  std::string text2 = "z2sync-instance v1\nbogus 3\n";
  detail::finish_with_checksum(text2);
  try {
    parse_instance(text2);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "bogus");
  }
}

TEST_CASE("sbm files must carry a balanced truth and a graph") {
  const auto inst = gen_sbm(10, 0.9, 0.1, SbmCentering::kMeanEstimate, 3);
  auto text = serialize_instance(inst);
  // Drop the truth line.
  const auto pos = text.find("truth ");
  const auto end = text.find('\n', pos);
  text.erase(pos, end - pos + 1);
  const auto body_end = text.rfind("checksum fnv1a64");
  text.erase(body_end);
  detail::finish_with_checksum(text);
  try {
    parse_instance(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "truth");
  }
}

TEST_CASE("file save/load round-trips through the filesystem") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "z2sync_io_test";
  fs::create_directories(dir);
  const auto path = (dir / "instance.z2").string();
  const auto inst = gen_er_bernoulli(16, 0.5, 0.95, 77);
  save_instance(inst, path);
  const auto back = load_instance(path);
  REQUIRE(instances_equal(inst, back));
  fs::remove_all(dir);
}

TEST_CASE("missing files raise IoError") {
  REQUIRE_THROWS_AS(load_instance("/nonexistent/path/file.z2"), IoError);
}

TEST_CASE("factor points round-trip bit-exactly") {
  Rng rng(5);
  const auto y = random_point(12, 5, rng);
  const auto text = serialize_factor(y);
  const auto back = parse_factor(text);
  REQUIRE((back.matrix().array() == y.matrix().array()).all());
}

TEST_CASE("factor files with non-unit rows are rejected") {
  Matrix bad = Matrix::Zero(3, 2);
  bad << 1, 0, 0, 2, 1, 0;  // row 1 has norm 2
  std::string text = "z2sync-factor v1\n";
  text += "n 3\n";
  text += "r 2\n";
  text += "y dense 3 2\n";
  text += detail::encode_matrix(bad);
  detail::finish_with_checksum(text);
  try {
    parse_factor(text);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    REQUIRE(e.field == "y");
  }
}
