#include "flowguard/detector.hpp"

#include <zlib.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flowguard/error.hpp"
#include "json.hpp"

namespace flowguard {

using ojson = nlohmann::ordered_json;

DetectionModel::DetectionModel(Matrix points, std::vector<int> labels, std::vector<double> mpdi, ScalerParams scaler,
                               ModelMeta meta)
    : index_(std::move(points)),
      labels_(std::move(labels)),
      mpdi_(std::move(mpdi)),
      scaler_(std::move(scaler)),
      meta_(std::move(meta)) {
  if (index_.size() == 0) throw Error(ErrorCode::AllNoise, "model has no training points");
  if (labels_.size() != index_.size()) throw Error(ErrorCode::CorruptFile, "label count differs from point count");
  if (index_.dims() != scaler_.dims()) throw Error(ErrorCode::DimensionMismatch, "scaler and points disagree on dims");
  for (int l : labels_) {
    if (l < 0 || static_cast<std::size_t>(l) >= mpdi_.size()) {
      throw Error(ErrorCode::CorruptFile, "training label without a threshold");
    }
  }
}

DetectionResult DetectionModel::classify_scaled(std::span<const double> scaled) const {
  const Neighbor nn = index_.nearest(scaled);
  DetectionResult r;
  r.nearest_index = nn.index;
  r.distance = nn.distance;
  r.nearest_cluster = labels_[nn.index];
  r.threshold = mpdi_[static_cast<std::size_t>(r.nearest_cluster)];
  r.verdict = r.distance <= r.threshold ? Verdict::Benign : Verdict::Anomaly;
  return r;
}

std::vector<double> max_pairwise_distances(const Matrix& points, std::span<const int> labels, std::size_t n_clusters) {
  std::vector<std::vector<std::size_t>> members(n_clusters);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::vector<double> out(n_clusters, 0.0);
  for (std::size_t c = 0; c < n_clusters; ++c) {
    const auto& m = members[c];
    for (std::size_t a = 0; a < m.size(); ++a) {
      for (std::size_t b = a + 1; b < m.size(); ++b) {
        out[c] = std::max(out[c], euclidean(points.row(m[a]), points.row(m[b])));
      }
    }
  }
  return out;
}

DetectionModel build_model(const Matrix& scaled_points, const ClusterAssignment& assignment, ScalerParams scaler,
                           ModelMeta meta) {
  if (assignment.labels.size() != scaled_points.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "assignment does not cover the training points");
  }
  if (assignment.n_clusters == 0) throw Error(ErrorCode::AllNoise, "every training point is noise");

  Matrix kept(0, scaled_points.cols());
  std::vector<int> labels;
  for (std::size_t i = 0; i < scaled_points.rows(); ++i) {
    if (assignment.labels[i] == kNoise) continue;
    kept.push_row(scaled_points.row(i));
    labels.push_back(assignment.labels[i]);
  }
  auto mpdi = max_pairwise_distances(kept, labels, assignment.n_clusters);
  return DetectionModel(std::move(kept), std::move(labels), std::move(mpdi), std::move(scaler), std::move(meta));
}

DetectionResult classify(const DetectionModel& model, std::span<const double> raw_vec) {
  const auto scaled = transform(model.scaler(), raw_vec);
  return model.classify_scaled(scaled);
}

std::vector<DetectionResult> classify_batch(const DetectionModel& model, const Matrix& rows) {
  std::vector<DetectionResult> out;
  out.reserve(rows.rows());
  if (rows.rows() > 0 && rows.cols() != model.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "row 0 has " + std::to_string(rows.cols()) + " values, model expects " +
                                                  std::to_string(model.dims()));
  }
  for (std::size_t i = 0; i < rows.rows(); ++i) out.push_back(classify(model, rows.row(i)));
  return out;
}

namespace {

std::string crc_of(const std::string& text) {
  const uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(text.data()), static_cast<uInt>(text.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

ojson body_of(const DetectionModel& model) {
  ojson j;
  j["format_version"] = kModelFormatVersion;
  ojson meta;
  meta["algo"] = model.meta().algo;
  meta["mode"] = model.meta().mode;
  meta["timespan_s"] = model.meta().timespan_s;
  ojson params = ojson::object();
  for (const auto& [k, v] : model.meta().params) params[k] = v;
  meta["params"] = params;
  meta["created"] = model.meta().created;
  j["meta"] = meta;
  j["scaler"] = {{"median", model.scaler().median}, {"iqr", model.scaler().iqr}};
  ojson points = ojson::array();
  const Matrix& pts = model.train_points();
  for (std::size_t i = 0; i < pts.rows(); ++i) {
    const auto r = pts.row(i);
    points.push_back(std::vector<double>(r.begin(), r.end()));
  }
  j["points"] = std::move(points);
  j["labels"] = model.train_labels();
  ojson mpdi = ojson::object();
  for (std::size_t c = 0; c < model.mpdi().size(); ++c) mpdi[std::to_string(c)] = model.mpdi()[c];
  j["mpdi"] = mpdi;
  return j;
}

}  // namespace

std::string serialize_model(const DetectionModel& model) {
  ojson j = body_of(model);
  const std::string body = j.dump();
  j["checksum"] = "crc32:" + crc_of(body);
  return j.dump() + "\n";
}

void save_model(const DetectionModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::UnwritablePath, "cannot write " + path.string());
  out << serialize_model(model);
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

DetectionModel deserialize_model(const std::string& text) {
  ojson j;
  try {
    j = ojson::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("model is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || !j.contains("format_version")) throw Error(ErrorCode::CorruptFile, "missing format_version");
    if (j.at("format_version").get<int>() != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format " + j.at("format_version").dump() + ", expected " +
                                                  std::to_string(kModelFormatVersion));
    }
    if (!j.contains("checksum")) throw Error(ErrorCode::CorruptFile, "missing checksum");
    const std::string stored = j.at("checksum").get<std::string>();
    j.erase("checksum");
    if (stored != "crc32:" + crc_of(j.dump())) throw Error(ErrorCode::CorruptFile, "checksum mismatch");

    ModelMeta meta;
    const auto& jm = j.at("meta");
    meta.algo = jm.at("algo").get<std::string>();
    meta.mode = jm.at("mode").get<std::string>();
    meta.timespan_s = jm.at("timespan_s").get<double>();
    for (const auto& [k, v] : jm.at("params").items()) meta.params.emplace_back(k, v.get<double>());
    meta.created = jm.at("created").get<std::string>();

    ScalerParams scaler{j.at("scaler").at("median").get<std::vector<double>>(),
                        j.at("scaler").at("iqr").get<std::vector<double>>()};
    if (scaler.median.size() != scaler.iqr.size()) throw Error(ErrorCode::CorruptFile, "scaler arrays differ in size");

    Matrix points(0, scaler.dims());
    for (const auto& row : j.at("points")) {
      auto r = row.get<std::vector<double>>();
      if (r.size() != scaler.dims()) throw Error(ErrorCode::CorruptFile, "point with wrong dimensionality");
      points.push_row(r);
    }
    auto labels = j.at("labels").get<std::vector<int>>();
    const auto& jmpdi = j.at("mpdi");
    std::vector<double> mpdi(jmpdi.size(), 0.0);
    for (const auto& [k, v] : jmpdi.items()) {
      const auto c = static_cast<std::size_t>(std::stoul(k));
      if (c >= mpdi.size()) throw Error(ErrorCode::CorruptFile, "threshold for unknown cluster " + k);
      mpdi[c] = v.get<double>();
    }
    return DetectionModel(std::move(points), std::move(labels), std::move(mpdi), std::move(scaler), std::move(meta));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed model: ") + e.what());
  } catch (const std::logic_error& e) {
    throw Error(ErrorCode::CorruptFile, std::string("malformed model: ") + e.what());
  }
}

DetectionModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace flowguard
