#pragma once

#include "z2sync/manifold.hpp"
#include "z2sync/types.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace z2sync {

struct IoError : std::runtime_error {
  explicit IoError(const std::string& message) : std::runtime_error(message) {}
};

// Malformed file contents; `field` names the offending field.
struct FormatError : std::runtime_error {
  FormatError(std::string field_name, const std::string& message)
      : std::runtime_error(field_name + ": " + message), field(std::move(field_name)) {}
  std::string field;
};

namespace detail {

inline constexpr char kB64Alphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string base64_encode(const std::vector<unsigned char>& bytes, std::size_t wrap = 76) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4 + bytes.size() / 48 + 2);
  std::size_t col = 0;
  auto put = [&](char c) {
    out.push_back(c);
    if (wrap > 0 && ++col == wrap) {
      out.push_back('\n');
      col = 0;
    }
  };
  std::size_t i = 0;
  while (i + 3 <= bytes.size()) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    put(kB64Alphabet[(v >> 18) & 63]);
    put(kB64Alphabet[(v >> 12) & 63]);
    put(kB64Alphabet[(v >> 6) & 63]);
    put(kB64Alphabet[v & 63]);
    i += 3;
  }
  const std::size_t rest = bytes.size() - i;
  if (rest == 1) {
    const unsigned v = bytes[i] << 16;
    put(kB64Alphabet[(v >> 18) & 63]);
    put(kB64Alphabet[(v >> 12) & 63]);
    put('=');
    put('=');
  } else if (rest == 2) {
    const unsigned v = (bytes[i] << 16) | (bytes[i + 1] << 8);
    put(kB64Alphabet[(v >> 18) & 63]);
    put(kB64Alphabet[(v >> 12) & 63]);
    put(kB64Alphabet[(v >> 6) & 63]);
    put('=');
  }
  if (out.empty() || out.back() != '\n') out.push_back('\n');
  return out;
}

inline int b64_value(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

// Decodes exactly `expected_bytes` from base64 text starting at `pos`
// (newlines skipped); advances pos past the consumed characters.
inline std::vector<unsigned char> base64_decode(std::string_view text, std::size_t& pos,
                                                std::size_t expected_bytes,
                                                const std::string& field) {
  std::vector<unsigned char> out;
  out.reserve(expected_bytes);
  int quad[4];
  int have = 0;
  int pad = 0;
  const std::size_t need_chars = (expected_bytes + 2) / 3 * 4;
  std::size_t consumed = 0;
  while (consumed < need_chars) {
    if (pos >= text.size()) throw FormatError(field, "truncated base64 payload");
    const char c = text[pos++];
    if (c == '\n' || c == '\r') continue;
    ++consumed;
    if (c == '=') {
      quad[have++] = 0;
      ++pad;
    } else {
      const int v = b64_value(c);
      if (v < 0 || pad > 0) throw FormatError(field, "invalid base64 character");
      quad[have++] = v;
    }
    if (have == 4) {
      const unsigned v = (quad[0] << 18) | (quad[1] << 12) | (quad[2] << 6) | quad[3];
      out.push_back(static_cast<unsigned char>((v >> 16) & 0xff));
      if (pad < 2) out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
      if (pad < 1) out.push_back(static_cast<unsigned char>(v & 0xff));
      have = 0;
    }
  }
  if (out.size() != expected_bytes) throw FormatError(field, "payload length mismatch");
  return out;
}

inline void append_double_le(std::vector<unsigned char>& bytes, double x) {
  const auto u = std::bit_cast<std::uint64_t>(x);
  for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>((u >> (8 * b)) & 0xff));
}

inline double read_double_le(const unsigned char* p) {
  std::uint64_t u = 0;
  for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(u);
}

// Row-major little-endian doubles.
inline std::string encode_matrix(const Matrix& m) {
  std::vector<unsigned char> bytes;
  bytes.reserve(static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) append_double_le(bytes, m(i, j));
  return base64_encode(bytes);
}

inline Matrix decode_matrix(std::string_view text, std::size_t& pos, Index rows, Index cols,
                            const std::string& field) {
  const std::size_t expected = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
  const auto bytes = base64_decode(text, pos, expected, field);
  Matrix m(rows, cols);
  std::size_t off = 0;
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j, off += 8) m(i, j) = read_double_le(bytes.data() + off);
  return m;
}

inline std::string format_double(double x) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.17g", x);
  return buffer;
}

inline double parse_double(const std::string& token, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(token, &used);
    if (used != token.size()) throw FormatError(field, "trailing characters in number");
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError(field, "not a number: " + token);
  }
}

inline std::uint64_t parse_u64(const std::string& token, const std::string& field) {
  try {
    std::size_t used = 0;
    const std::uint64_t v = std::stoull(token, &used);
    if (used != token.size()) throw FormatError(field, "trailing characters in integer");
    return v;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception&) {
    throw FormatError(field, "not an integer: " + token);
  }
}

// Reads the next line starting at pos (without the newline); advances pos.
inline bool next_line(std::string_view text, std::size_t& pos, std::string& line) {
  if (pos >= text.size()) return false;
  const std::size_t end = text.find('\n', pos);
  if (end == std::string_view::npos) {
    line.assign(text.substr(pos));
    pos = text.size();
  } else {
    line.assign(text.substr(pos, end - pos));
    pos = end + 1;
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

inline std::vector<std::string> split_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream in(line);
  std::string t;
  while (in >> t) tokens.push_back(t);
  return tokens;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failure: " + path);
  return buffer.str();
}

inline void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  out.flush();
  if (!out) throw IoError("write failure: " + path);
}

inline std::string sign_string(const SignVector& z) {
  std::string s;
  s.reserve(static_cast<std::size_t>(z.size()));
  for (Index i = 0; i < z.size(); ++i) s.push_back(z[i] > 0 ? '+' : '-');
  return s;
}

inline SignVector parse_sign_string(const std::string& s, Index n) {
  if (static_cast<Index>(s.size()) != n) throw FormatError("truth", "length does not match n");
  Eigen::VectorXi z(n);
  for (Index i = 0; i < n; ++i) {
    if (s[static_cast<std::size_t>(i)] == '+') z[i] = 1;
    else if (s[static_cast<std::size_t>(i)] == '-') z[i] = -1;
    else throw FormatError("truth", "entries must be '+' or '-'");
  }
  return SignVector(std::move(z));
}

// Appends the trailing checksum line; the hash covers everything before it.
inline void finish_with_checksum(std::string& body) {
  char line[64];
  std::snprintf(line, sizeof line, "checksum fnv1a64 %016llx\n",
                static_cast<unsigned long long>(fnv1a64(body)));
  body += line;
}

// Verifies and strips the checksum line; returns the covered prefix.
inline std::string_view verify_checksum(std::string_view text) {
  const std::size_t mark = text.rfind("checksum fnv1a64 ");
  if (mark == std::string_view::npos || (mark != 0 && text[mark - 1] != '\n'))
    throw FormatError("checksum", "missing checksum line");
  const std::string_view prefix = text.substr(0, mark);
  std::string hex(text.substr(mark + 17));
  while (!hex.empty() && (hex.back() == '\n' || hex.back() == '\r')) hex.pop_back();
  if (hex.size() != 16) throw FormatError("checksum", "malformed checksum value");
  std::uint64_t stated = 0;
  for (char c : hex) {
    int v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else throw FormatError("checksum", "malformed checksum value");
    stated = (stated << 4) | static_cast<std::uint64_t>(v);
  }
  if (stated != fnv1a64(prefix)) throw FormatError("checksum", "checksum mismatch");
  return prefix;
}

}  // namespace detail

inline std::string serialize_instance(const ProblemInstance& inst) {
  std::string out;
  out += "z2sync-instance v1\n";
  const Index n = inst.n();
  if (const auto* g = std::get_if<GaussianParams>(&inst.params)) {
    out += "model gaussian\n";
    out += "n " + std::to_string(n) + "\n";
    out += "sigma " + detail::format_double(g->sigma) + "\n";
  } else if (const auto* e = std::get_if<ErBernoulliParams>(&inst.params)) {
    out += "model erbern\n";
    out += "n " + std::to_string(n) + "\n";
    out += "p " + detail::format_double(e->p) + "\n";
    out += "delta " + detail::format_double(e->delta) + "\n";
  } else if (const auto* s = std::get_if<SbmParams>(&inst.params)) {
    out += "model sbm\n";
    out += "n " + std::to_string(n) + "\n";
    out += "p " + detail::format_double(s->p) + "\n";
    out += "q " + detail::format_double(s->q) + "\n";
    out += std::string("centering ") +
           (s->centering == SbmCentering::kMeanEstimate ? "mean" : "knownpq") + "\n";
  } else {
    out += "model raw\n";
    out += "n " + std::to_string(n) + "\n";
  }
  out += "seed " + std::to_string(inst.seed) + "\n";
  if (inst.truth) out += "truth " + detail::sign_string(*inst.truth) + "\n";
  if (inst.graph) {
    out += "graph dense " + std::to_string(n) + " " + std::to_string(n) + "\n";
    out += detail::encode_matrix(inst.graph->weights());
  }
  out += "cost dense " + std::to_string(n) + " " + std::to_string(n) + "\n";
  out += detail::encode_matrix(inst.cost.entries());
  detail::finish_with_checksum(out);
  return out;
}

inline ProblemInstance parse_instance(std::string_view full_text) {
  using detail::next_line;
  using detail::split_tokens;

  const std::string_view text = detail::verify_checksum(full_text);
  std::size_t pos = 0;
  std::string line;

  if (!next_line(text, pos, line) || line != "z2sync-instance v1")
    throw FormatError("version", "expected header 'z2sync-instance v1'");

  std::string model;
  Index n = -1;
  std::optional<double> sigma, p, q, delta;
  std::optional<SbmCentering> centering;
  std::uint64_t seed = 0;
  bool have_seed = false;
  std::optional<std::string> truth_string;
  std::optional<Matrix> graph_m, cost_m;

  while (next_line(text, pos, line)) {
    if (line.empty()) continue;
    const auto tokens = split_tokens(line);
    const std::string& key = tokens[0];
    auto expect_args = [&](std::size_t count) {
      if (tokens.size() != count + 1) throw FormatError(key, "wrong number of values");
    };
    if (key == "model") {
      expect_args(1);
      model = tokens[1];
      if (model != "gaussian" && model != "erbern" && model != "sbm" && model != "raw")
        throw FormatError("model", "unknown model: " + model);
    } else if (key == "n") {
      expect_args(1);
      n = static_cast<Index>(detail::parse_u64(tokens[1], "n"));
      if (n < 1 || n > kMaxDenseN) throw FormatError("n", "n out of range [1, 4096]");
    } else if (key == "sigma" || key == "p" || key == "q" || key == "delta") {
      expect_args(1);
      const double v = detail::parse_double(tokens[1], key);
      if (key == "sigma") sigma = v;
      else if (key == "p") p = v;
      else if (key == "q") q = v;
      else delta = v;
    } else if (key == "centering") {
      expect_args(1);
      if (tokens[1] == "mean") centering = SbmCentering::kMeanEstimate;
      else if (tokens[1] == "knownpq") centering = SbmCentering::kKnownPQ;
      else throw FormatError("centering", "expected 'mean' or 'knownpq'");
    } else if (key == "seed") {
      expect_args(1);
      seed = detail::parse_u64(tokens[1], "seed");
      have_seed = true;
    } else if (key == "truth") {
      expect_args(1);
      truth_string = tokens[1];
    } else if (key == "graph" || key == "cost") {
      expect_args(3);
      if (tokens[1] != "dense") throw FormatError(key, "expected 'dense' payload");
      const Index rows = static_cast<Index>(detail::parse_u64(tokens[2], key));
      const Index cols = static_cast<Index>(detail::parse_u64(tokens[3], key));
      if (n < 0 || rows != n || cols != n) throw FormatError(key, "matrix dimensions must be n x n");
      Matrix m = detail::decode_matrix(text, pos, rows, cols, key);
      if (key == "graph") graph_m = std::move(m);
      else cost_m = std::move(m);
    } else {
      throw FormatError(key, "unknown field");
    }
  }

  if (model.empty()) throw FormatError("model", "missing");
  if (n < 1) throw FormatError("n", "missing");
  if (!have_seed) throw FormatError("seed", "missing");
  if (!cost_m) throw FormatError("cost", "missing");

  std::optional<SignVector> truth;
  if (truth_string) truth = detail::parse_sign_string(*truth_string, n);

  std::optional<Graph> graph;
  if (graph_m) {
    try {
      graph = Graph(std::move(*graph_m));
    } catch (const std::invalid_argument& e) {
      throw FormatError("graph", e.what());
    }
  }

  CostMatrix cost = [&] {
    try {
      return CostMatrix(std::move(*cost_m));
    } catch (const std::invalid_argument& e) {
      throw FormatError("cost", e.what());
    }
  }();

  ModelParams params = RawParams{n};
  if (model == "gaussian") {
    if (!sigma) throw FormatError("sigma", "missing for gaussian model");
    if (*sigma < 0.0) throw FormatError("sigma", "must be >= 0");
    params = GaussianParams{n, *sigma};
  } else if (model == "erbern") {
    if (!p) throw FormatError("p", "missing for erbern model");
    if (!delta) throw FormatError("delta", "missing for erbern model");
    if (*p < 0.0 || *p > 1.0) throw FormatError("p", "must be in [0, 1]");
    if (*delta < 0.0 || *delta > 1.0) throw FormatError("delta", "must be in [0, 1]");
    if (!graph) throw FormatError("graph", "missing for erbern model");
    params = ErBernoulliParams{n, *p, *delta};
  } else if (model == "sbm") {
    if (!p) throw FormatError("p", "missing for sbm model");
    if (!q) throw FormatError("q", "missing for sbm model");
    if (!centering) throw FormatError("centering", "missing for sbm model");
    if (*p < 0.0 || *p > 1.0 || *q < 0.0 || *q > 1.0 || *q >= *p)
      throw FormatError("p", "sbm requires 0 <= q < p <= 1");
    if (!graph) throw FormatError("graph", "missing for sbm model");
    if (!truth) throw FormatError("truth", "missing for sbm model");
    if (!truth->is_balanced()) throw FormatError("truth", "sbm truth must be balanced");
    params = SbmParams{n, *p, *q, *centering};
  }

  return ProblemInstance{std::move(cost), std::move(truth), std::move(graph), params, seed};
}

inline void save_instance(const ProblemInstance& inst, const std::string& path) {
  detail::write_file(path, serialize_instance(inst));
}

inline ProblemInstance load_instance(const std::string& path) {
  return parse_instance(detail::read_file(path));
}

inline std::string serialize_factor(const FactorPoint& y) {
  std::string out;
  out += "z2sync-factor v1\n";
  out += "n " + std::to_string(y.n()) + "\n";
  out += "r " + std::to_string(y.r()) + "\n";
  out += "y dense " + std::to_string(y.n()) + " " + std::to_string(y.r()) + "\n";
  out += detail::encode_matrix(y.matrix());
  detail::finish_with_checksum(out);
  return out;
}

inline FactorPoint parse_factor(std::string_view full_text) {
  using detail::next_line;
  const std::string_view text = detail::verify_checksum(full_text);
  std::size_t pos = 0;
  std::string line;
  if (!next_line(text, pos, line) || line != "z2sync-factor v1")
    throw FormatError("version", "expected header 'z2sync-factor v1'");
  Index n = -1, r = -1;
  std::optional<Matrix> y;
  while (next_line(text, pos, line)) {
    if (line.empty()) continue;
    const auto tokens = detail::split_tokens(line);
    const std::string& key = tokens[0];
    if (key == "n" && tokens.size() == 2) {
      n = static_cast<Index>(detail::parse_u64(tokens[1], "n"));
    } else if (key == "r" && tokens.size() == 2) {
      r = static_cast<Index>(detail::parse_u64(tokens[1], "r"));
    } else if (key == "y" && tokens.size() == 4 && tokens[1] == "dense") {
      const Index rows = static_cast<Index>(detail::parse_u64(tokens[2], "y"));
      const Index cols = static_cast<Index>(detail::parse_u64(tokens[3], "y"));
      if (rows != n || cols != r) throw FormatError("y", "dimensions must match n and r");
      y = detail::decode_matrix(text, pos, rows, cols, "y");
    } else {
      throw FormatError(key, "unknown or malformed field");
    }
  }
  if (n < 1) throw FormatError("n", "missing");
  if (r < 1) throw FormatError("r", "missing");
  if (!y) throw FormatError("y", "missing");
  try {
    return FactorPoint(std::move(*y));
  } catch (const std::invalid_argument& e) {
    throw FormatError("y", e.what());
  }
}

inline void save_factor(const FactorPoint& y, const std::string& path) {
  detail::write_file(path, serialize_factor(y));
}

inline FactorPoint load_factor(const std::string& path) {
  return parse_factor(detail::read_file(path));
}

}  // namespace z2sync
