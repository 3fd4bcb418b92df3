#include "flowguard/csv.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "flowguard/error.hpp"

namespace flowguard {

namespace {

constexpr const char* kMetaColumns[] = {"src", "sport", "dst", "dport", "proto", "start_us", "end_us", "n_pkts"};
constexpr std::size_t kMetaCount = std::size(kMetaColumns);

template <typename Int>
Int parse_int(std::string_view text, const char* what) {
  Int v{};
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, std::string("bad ") + what + " '" + std::string(text) + "'");
  }
  return v;
}

Ipv4Address parse_ip(std::string_view text) {
  auto ip = Ipv4Address::parse(text);
  if (!ip) throw Error(ErrorCode::ParseError, "bad IPv4 address '" + std::string(text) + "'");
  return *ip;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

void write_meta(std::ostream& out, const FeatureMeta& m) {
  const Endpoint rx = m.receiver();
  out << m.sender.ip.to_string() << ',' << m.sender.port << ',' << rx.ip.to_string() << ',' << rx.port << ','
      << static_cast<int>(m.key.protocol) << ',' << m.segment_start_us << ',' << m.segment_end_us << ','
      << m.packet_count;
}

FeatureMeta parse_meta(const std::vector<std::string>& cells, std::span<const std::size_t> pos) {
  FeatureMeta m;
  const Endpoint src{parse_ip(cells[pos[0]]), parse_int<std::uint16_t>(cells[pos[1]], "sport")};
  const Endpoint dst{parse_ip(cells[pos[2]]), parse_int<std::uint16_t>(cells[pos[3]], "dport")};
  const auto proto = parse_int<std::uint8_t>(cells[pos[4]], "proto");
  m.key = src <= dst ? FlowKey{src, dst, proto} : FlowKey{dst, src, proto};
  m.sender = src;
  m.segment_start_us = parse_int<std::int64_t>(cells[pos[5]], "start_us");
  m.segment_end_us = parse_int<std::int64_t>(cells[pos[6]], "end_us");
  m.packet_count = parse_int<std::uint64_t>(cells[pos[7]], "n_pkts");
  return m;
}

// Column positions of the meta fields in a header; throws if any is missing.
std::vector<std::size_t> meta_positions(const std::vector<std::string>& header) {
  std::vector<std::size_t> pos;
  for (const char* name : kMetaColumns) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("missing column '") + name + "'");
    pos.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  return pos;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return in;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double parse_double(std::string_view text) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, "bad number '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

void write_features_csv(std::ostream& out, std::span<const FeatureVector> vectors) {
  for (std::size_t i = 0; i < kMetaCount; ++i) out << (i ? "," : "") << kMetaColumns[i];
  for (const auto& name : feature_names()) out << ',' << name;
  out << '\n';
  for (const auto& v : vectors) {
    write_meta(out, v.meta);
    for (double x : v.values) out << ',' << format_double(x);
    out << '\n';
  }
}

void write_features_csv(const std::filesystem::path& path, std::span<const FeatureVector> vectors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  write_features_csv(out, vectors);
}

FeatureTable read_features_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "feature file is empty");
  const auto header = split_csv_line(strip_cr(line));
  const auto meta_pos = meta_positions(header);

  std::vector<std::size_t> feature_pos;
  std::vector<std::string> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i].starts_with("fwd_") || header[i].starts_with("bwd_")) {
      feature_pos.push_back(i);
      feature_cols.push_back(header[i]);
    }
  }
  const auto& names = feature_names();
  if (feature_cols.size() != kFeatureDims || !std::equal(feature_cols.begin(), feature_cols.end(), names.begin())) {
    throw Error(ErrorCode::DimensionMismatch, "expected the " + std::to_string(kFeatureDims) +
                                                  " canonical feature columns, found " +
                                                  std::to_string(feature_cols.size()));
  }

  FeatureTable table;
  table.values = Matrix(0, kFeatureDims);
  std::vector<double> row(kFeatureDims);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                                             " cells, header has " + std::to_string(header.size()));
    }
    table.meta.push_back(parse_meta(cells, meta_pos));
    for (std::size_t k = 0; k < kFeatureDims; ++k) row[k] = parse_double(cells[feature_pos[k]]);
    table.values.push_row(row);
  }
  return table;
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_features_csv(in);
}

void write_results_csv(std::ostream& out, std::span<const FeatureMeta> meta, std::span<const DetectionResult> results) {
  if (meta.size() != results.size()) throw Error(ErrorCode::LengthMismatch, "meta and results differ in length");
  for (std::size_t i = 0; i < kMetaCount; ++i) out << (i ? "," : "") << kMetaColumns[i];
  out << ",verdict,distance,nearest_cluster,threshold\n";
  for (std::size_t i = 0; i < meta.size(); ++i) {
    write_meta(out, meta[i]);
    const auto& r = results[i];
    out << ',' << (r.verdict == Verdict::Benign ? "benign" : "anomaly") << ',' << format_double(r.distance) << ','
        << r.nearest_cluster << ',' << format_double(r.threshold) << '\n';
  }
}

ResultTable read_results_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "results file is empty");
  const auto header = split_csv_line(strip_cr(line));
  const auto meta_pos = meta_positions(header);
  auto col = [&header](const char* name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("missing column '") + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_verdict = col("verdict"), c_dist = col("distance"), c_cluster = col("nearest_cluster"),
                    c_thr = col("threshold");
  ResultTable table;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::ParseError, "ragged results row");
    table.meta.push_back(parse_meta(cells, meta_pos));
    DetectionResult r;
    if (cells[c_verdict] == "benign") r.verdict = Verdict::Benign;
    else if (cells[c_verdict] == "anomaly") r.verdict = Verdict::Anomaly;
    else throw Error(ErrorCode::ParseError, "bad verdict '" + cells[c_verdict] + "'");
    r.distance = parse_double(cells[c_dist]);
    r.nearest_cluster = parse_int<int>(cells[c_cluster], "nearest_cluster");
    r.threshold = parse_double(cells[c_thr]);
    table.results.push_back(r);
  }
  return table;
}

void write_labels_csv(std::ostream& out, const LabelSpec& spec) {
  out << "src_ip,dst_ip,dst_port,start_us,end_us,label,scenario\n";
  for (const auto& r : spec.rules) {
    out << (r.src_ip ? r.src_ip->to_string() : "") << ',' << (r.dst_ip ? r.dst_ip->to_string() : "") << ','
        << (r.dst_port ? std::to_string(*r.dst_port) : "") << ',' << r.start_us << ',' << r.end_us << ','
        << to_string(r.label) << ',' << r.scenario << '\n';
  }
}

LabelSpec read_labels_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "label file is empty");
  const auto header = split_csv_line(strip_cr(line));
  const std::vector<std::string> expected{"src_ip", "dst_ip", "dst_port", "start_us", "end_us", "label", "scenario"};
  if (header != expected) throw Error(ErrorCode::ParseError, "unexpected label file header");
  LabelSpec spec;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != expected.size()) throw Error(ErrorCode::ParseError, "label row must have 7 cells");
    LabelRule r;
    if (!c[0].empty()) r.src_ip = parse_ip(c[0]);
    if (!c[1].empty()) r.dst_ip = parse_ip(c[1]);
    if (!c[2].empty()) r.dst_port = parse_int<std::uint16_t>(c[2], "dst_port");
    r.start_us = parse_int<std::int64_t>(c[3], "start_us");
    r.end_us = parse_int<std::int64_t>(c[4], "end_us");
    if (r.start_us > r.end_us) throw Error(ErrorCode::ParseError, "label rule with start after end");
    r.label = parse_ground_truth(c[5]);
    r.scenario = c[6];
    spec.rules.push_back(std::move(r));
  }
  return spec;
}

LabelSpec read_labels_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_labels_csv(in);
}

void write_kdistance_csv(std::ostream& out, const KDistanceCurve& curve) {
  out << "rank,distance\n";
  for (std::size_t i = 0; i < curve.distances.size(); ++i) out << (i + 1) << ',' << format_double(curve.distances[i]) << '\n';
}

}  // namespace flowguard
