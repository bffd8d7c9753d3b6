#include "tobit_iht/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tobit_iht/error.hpp"

namespace tobit::io {
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": invalid JSON: " + e.what());
  }
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

double parse_double(std::string_view field, const fs::path& path, std::size_t line_no) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    fail(ErrorKind::schema, path.string() + ":" + std::to_string(line_no) +
                                ": cannot parse '" + std::string(field) + "' as a number");
  }
  return v;
}

template <class T>
T field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) {
    fail(ErrorKind::schema, path.string() + ": missing field \"" + key + "\"");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    fail(ErrorKind::schema, path.string() + ": field \"" + key + "\": " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) fail(ErrorKind::io, "write to " + path.string() + " failed");
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_dataset_csv(const fs::path& path, const CensoredDataset& data) {
  std::string out = "y,censored";
  for (Index j = 1; j <= data.d(); ++j) out += ",x" + std::to_string(j);
  out += '\n';
  const auto pos = data.input_order();
  for (Index r = 0; r < data.n(); ++r) {
    const Index i = pos[static_cast<std::size_t>(r)];
    out += format_double(data.observed_y(i));
    out += data.censored(i) ? ",1" : ",0";
    for (Index j = 1; j <= data.d(); ++j) {
      out += ',';
      out += format_double(data.x()(i, j));
    }
    out += '\n';
  }
  write_text(path, out);
}

CensoredDataset read_dataset_csv(const fs::path& path, double c0) {
  const std::string text = read_text(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;

  if (!std::getline(in, line)) fail(ErrorKind::schema, path.string() + ": empty file");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 2 || header[0] != "y" || header[1] != "censored") {
    fail(ErrorKind::schema, path.string() + ":1: header must start with 'y,censored'");
  }
  const Index d = static_cast<Index>(header.size()) - 2;
  for (Index j = 1; j <= d; ++j) {
    if (header[static_cast<std::size_t>(j + 1)] != "x" + std::to_string(j)) {
      fail(ErrorKind::schema, path.string() + ":1: expected column 'x" + std::to_string(j) +
                                  "', found '" +
                                  std::string(header[static_cast<std::size_t>(j + 1)]) + "'");
    }
  }

  std::vector<double> values;
  std::vector<double> ys;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (static_cast<Index>(cells.size()) != d + 2) {
      fail(ErrorKind::schema, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(d + 2) + " fields, found " +
                                  std::to_string(cells.size()));
    }
    const double y = parse_double(cells[0], path, line_no);
    if (cells[1] != "0" && cells[1] != "1") {
      fail(ErrorKind::schema, path.string() + ":" + std::to_string(line_no) +
                                  ": censored must be 0 or 1");
    }
    const bool flagged = cells[1] == "1";
    if (flagged != (y <= c0)) {
      fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) +
                                ": censored flag disagrees with y <= c0 (c0 = " +
                                format_double(c0) + ")");
    }
    ys.push_back(y);
    for (Index j = 0; j < d; ++j) {
      values.push_back(parse_double(cells[static_cast<std::size_t>(j + 2)], path, line_no));
    }
  }
  const auto n = static_cast<Index>(ys.size());
  if (n == 0) fail(ErrorKind::schema, path.string() + ": no data rows");
  Matrix features(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) features(i, j) = values[static_cast<std::size_t>(i * d + j)];
  }
  return CensoredDataset::from_features(features, Eigen::Map<const Vector>(ys.data(), n), c0);
}

void write_truth_json(const fs::path& path, const GroundTruth& truth) {
  json j;
  j["beta"] = std::vector<double>(truth.params.beta.data(),
                                  truth.params.beta.data() + truth.params.beta.size());
  j["sigma"] = truth.params.sigma;
  j["c0"] = truth.c0;
  j["s0"] = truth.s0;
  write_text(path, j.dump(2) + "\n");
}

GroundTruth read_truth_json(const fs::path& path) {
  const json j = read_json(path);
  const auto beta = field<std::vector<double>>(j, "beta", path);
  GroundTruth t;
  t.params.beta = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  t.params.sigma = field<double>(j, "sigma", path);
  t.c0 = field<double>(j, "c0", path);
  t.s0 = field<Index>(j, "s0", path);
  return t;
}

void write_shard_manifest(const fs::path& path, const ShardManifest& manifest) {
  json j;
  j["c0"] = manifest.c0;
  j["shards"] = json::array();
  for (const auto& s : manifest.shards) {
    j["shards"].push_back({{"machine_id", s.machine_id}, {"file", s.file}, {"rows", s.rows}});
  }
  write_text(path, j.dump(2) + "\n");
}

ShardManifest read_shard_manifest(const fs::path& path) {
  const json j = read_json(path);
  ShardManifest m;
  m.c0 = j.contains("c0") ? field<double>(j, "c0", path) : 0.0;
  if (!j.contains("shards") || !j["shards"].is_array() || j["shards"].empty()) {
    fail(ErrorKind::schema, path.string() + ": \"shards\" must be a nonempty array");
  }
  for (const auto& e : j["shards"]) {
    ShardEntry s;
    s.machine_id = field<int>(e, "machine_id", path);
    s.file = field<std::string>(e, "file", path);
    s.rows = e.contains("rows") ? field<Index>(e, "rows", path) : 0;
    m.shards.push_back(std::move(s));
  }
  return m;
}

std::vector<Shard> load_shards(const fs::path& manifest_path) {
  const ShardManifest m = read_shard_manifest(manifest_path);
  std::vector<Shard> out;
  for (const auto& e : m.shards) {
    const fs::path file = manifest_path.parent_path() / e.file;
    if (!fs::exists(file)) {
      fail(ErrorKind::io, "shard " + std::to_string(e.machine_id) + ": missing file " +
                              file.string());
    }
    Shard s{e.machine_id, read_dataset_csv(file, m.c0)};
    if (e.rows != 0 && s.data.n() != e.rows) {
      fail(ErrorKind::data, "shard " + std::to_string(e.machine_id) + ": manifest lists " +
                                std::to_string(e.rows) + " rows, file has " +
                                std::to_string(s.data.n()));
    }
    out.push_back(std::move(s));
  }
  std::sort(out.begin(), out.end(),
            [](const Shard& a, const Shard& b) { return a.machine_id < b.machine_id; });
  return out;
}

std::string theta_json(const Theta& theta) {
  json j;
  j["delta"] = std::vector<double>(theta.delta.data(), theta.delta.data() + theta.delta.size());
  j["gamma"] = theta.gamma;
  return j.dump();
}

Theta read_theta_json(const fs::path& path) {
  json j = read_json(path);
  if (j.contains("theta")) j = j["theta"];
  const auto delta = field<std::vector<double>>(j, "delta", path);
  return Theta{Eigen::Map<const Vector>(delta.data(), static_cast<Index>(delta.size())),
               field<double>(j, "gamma", path)};
}

void write_trace_csv(const fs::path& path, const FitResult& fit) {
  std::string out = "iter,nll,step_norm,support_size,eta_used\n";
  for (const auto& r : fit.trace) {
    out += std::to_string(r.iter) + ',' + format_double(r.nll) + ',' +
           format_double(r.step_norm) + ',' + std::to_string(r.support.size()) + ',' +
           format_double(r.eta_used) + '\n';
  }
  write_text(path, out);
}

void write_round_trace_csv(const fs::path& path, const FitResult& fit) {
  std::string out = "round,iter,nll,step_norm,support_size,eta_used\n";
  for (const auto& r : fit.trace) {
    out += std::to_string(r.round) + ',' + std::to_string(r.iter) + ',' +
           format_double(r.nll) + ',' + format_double(r.step_norm) + ',' +
           std::to_string(r.support.size()) + ',' + format_double(r.eta_used) + '\n';
  }
  write_text(path, out);
}

}  // namespace tobit::io
