#include "flowguard/evaluation.hpp"

#include <iomanip>
#include <sstream>

#include "flowguard/error.hpp"
#include "json.hpp"

namespace flowguard {

std::string to_string(GroundTruth g) {
  switch (g) {
    case GroundTruth::Benign: return "benign";
    case GroundTruth::Attack: return "attack";
    case GroundTruth::AttackVector: return "attack_vector";
    case GroundTruth::Effect: return "effect";
  }
  return "benign";
}

GroundTruth parse_ground_truth(const std::string& s) {
  if (s == "benign") return GroundTruth::Benign;
  if (s == "attack") return GroundTruth::Attack;
  if (s == "attack_vector") return GroundTruth::AttackVector;
  if (s == "effect") return GroundTruth::Effect;
  throw Error(ErrorCode::ParseError, "unknown label '" + s + "'");
}

bool LabelRule::matches(const FeatureMeta& meta) const noexcept {
  if (meta.segment_end_us < start_us || meta.segment_start_us > end_us) return false;
  auto oriented = [this](const Endpoint& src, const Endpoint& dst) {
    return (!src_ip || *src_ip == src.ip) && (!dst_ip || *dst_ip == dst.ip) && (!dst_port || *dst_port == dst.port);
  };
  const Endpoint sender = meta.sender;
  const Endpoint receiver = meta.receiver();
  return oriented(sender, receiver) || oriented(receiver, sender);
}

SegmentLabel label_of(const FeatureMeta& meta, const LabelSpec& spec) {
  for (const auto& rule : spec.rules) {
    if (rule.matches(meta)) return {rule.label, rule.scenario};
  }
  return {};
}

void ScopeMetrics::finalize() noexcept {
  precision = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  recall = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

namespace {

void count(ScopeMetrics& m, bool truth_positive, bool predicted_positive) {
  if (truth_positive) (predicted_positive ? m.tp : m.fn) += 1;
  else (predicted_positive ? m.fp : m.tn) += 1;
}

}  // namespace

EvalReport evaluate(std::span<const DetectionResult> results, std::span<const SegmentLabel> labels,
                    const EvalOptions& options) {
  if (results.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(results.size()) + " results vs " +
                                               std::to_string(labels.size()) + " labels");
  }
  EvalReport report;
  for (const auto& l : labels) {
    if (l.label != GroundTruth::Benign && !l.scenario.empty()) report.per_scenario[l.scenario];
  }

  for (std::size_t i = 0; i < results.size(); ++i) {
    const SegmentLabel& l = labels[i];
    if (l.label == GroundTruth::Effect && !options.effect_positive) {
      ++report.ignored_count;
      continue;
    }
    const bool truth = l.label != GroundTruth::Benign;
    const bool predicted = results[i].verdict == Verdict::Anomaly;
    count(report.overall, truth, predicted);
    if (truth) {
      if (!l.scenario.empty()) count(report.per_scenario[l.scenario], truth, predicted);
    } else {
      for (auto& [id, m] : report.per_scenario) count(m, truth, predicted);
    }
  }
  report.overall.finalize();
  for (auto& [id, m] : report.per_scenario) m.finalize();
  return report;
}

std::string report_to_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  auto scope = [](const ScopeMetrics& m) {
    return ordered_json{{"tp", m.tp},
                        {"fp", m.fp},
                        {"fn", m.fn},
                        {"tn", m.tn},
                        {"precision", m.precision},
                        {"recall", m.recall},
                        {"f1", m.f1}};
  };
  ordered_json j;
  j["overall"] = scope(report.overall);
  ordered_json per = ordered_json::object();
  for (const auto& [id, m] : report.per_scenario) per[id] = scope(m);
  j["per_scenario"] = std::move(per);
  j["ignored_count"] = report.ignored_count;
  return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "scope" << std::right << std::setw(7) << "tp" << std::setw(7) << "fp"
      << std::setw(7) << "fn" << std::setw(7) << "tn" << std::setw(11) << "precision" << std::setw(9) << "recall"
      << std::setw(8) << "f1" << '\n';
  auto line = [&out](const std::string& name, const ScopeMetrics& m) {
    out << std::left << std::setw(10) << name << std::right << std::setw(7) << m.tp << std::setw(7) << m.fp
        << std::setw(7) << m.fn << std::setw(7) << m.tn << std::fixed << std::setprecision(4) << std::setw(11)
        << m.precision << std::setw(9) << m.recall << std::setw(8) << m.f1 << '\n';
  };
  line("overall", report.overall);
  for (const auto& [id, m] : report.per_scenario) line(id, m);
  out << "ignored (effect): " << report.ignored_count << '\n';
  return out.str();
}

}  // namespace flowguard
