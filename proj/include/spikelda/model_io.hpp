#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spikelda/common.hpp"
#include "spikelda/pclda.hpp"

namespace spikelda {

namespace detail {

using nlohmann::json;

inline json vec_to_json(const Vector& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

inline Vector vec_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw SchemaError(std::string("model: '") + what + "' must be an array");
  std::vector<double> v = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

}  // namespace detail

// JSON model document. Doubles are emitted with shortest-round-trip decimal
// text (at most 17 significant digits), so save followed by load reproduces
// every value bit-exactly. U_hat is stored column-major with an explicit row
// count.
inline nlohmann::json model_to_json(const PCLDAModel& m) {
  using nlohmann::json;
  json j;
  j["format"] = "spikelda-model";
  j["version"] = 1;
  j["kind"] = "pclda-binary";
  j["p"] = m.p();
  j["d"] = m.whitener.model().d;
  j["lambda_hat"] = detail::vec_to_json(m.whitener.model().lambda_hat);
  j["sigma2_hat"] = m.whitener.model().sigma2_hat;
  const Matrix& u = m.whitener.model().u_hat;
  j["U_hat"] = {{"rows", u.rows()},
                {"cols", u.cols()},
                {"order", "column-major"},
                {"data", std::vector<double>(u.data(), u.data() + u.size())}};
  j["class_means"] = {detail::vec_to_json(m.class_means[0]),
                      detail::vec_to_json(m.class_means[1])};
  j["counts"] = {m.class_counts[0], m.class_counts[1]};
  j["class_labels"] = {m.class_labels[0], m.class_labels[1]};
  j["zeta_hat"] = detail::vec_to_json(m.zeta_hat);
  j["selected"] = m.selected;
  j["midpoint"] = detail::vec_to_json(m.midpoint);
  j["prior_offset"] = m.prior_offset;
  j["score_offset"] = m.score_offset;
  if (m.selection.kind == SelectionMode::Kind::TopS) {
    j["selection_mode"] = {{"kind", "top_s"}, {"s", m.selection.s}};
  } else {
    j["selection_mode"] = {{"kind", "threshold"},
                           {"C", m.selection.c},
                           {"alpha", m.selection.alpha},
                           {"fallback_top1", m.selection.fallback_top1},
                           {"t_n", m.t_n}};
  }
  if (m.feature_offset.size() > 0)
    j["feature_offset"] = detail::vec_to_json(m.feature_offset);
  return j;
}

inline PCLDAModel model_from_json(const nlohmann::json& j) {
  using nlohmann::json;
  try {
    if (j.at("format") != "spikelda-model")
      throw SchemaError("model: unrecognized format field");
    if (j.at("kind") != "pclda-binary")
      throw SchemaError("model: unsupported kind '" + j.at("kind").get<std::string>() + "'");
    const Index p = j.at("p").get<Index>();
    SpikedCovModel spiked;
    spiked.d = j.at("d").get<int>();
    spiked.lambda_hat = detail::vec_from_json(j.at("lambda_hat"), "lambda_hat");
    spiked.sigma2_hat = j.at("sigma2_hat").get<double>();
    const auto& ju = j.at("U_hat");
    const Index rows = ju.at("rows").get<Index>();
    const Index cols = ju.at("cols").get<Index>();
    std::vector<double> data = ju.at("data").get<std::vector<double>>();
    if (ju.at("order") != "column-major" ||
        static_cast<Index>(data.size()) != rows * cols || rows != p ||
        cols != spiked.d)
      throw SchemaError("model: inconsistent U_hat block");
    spiked.u_hat = Eigen::Map<const Matrix>(data.data(), rows, cols);
    if (spiked.sigma2_hat <= 0.0) throw SchemaError("model: sigma2_hat must be positive");

    PCLDAModel m{WhiteningOperator(std::move(spiked))};
    m.class_means = {detail::vec_from_json(j.at("class_means").at(0), "class_means"),
                     detail::vec_from_json(j.at("class_means").at(1), "class_means")};
    m.class_counts = {j.at("counts").at(0).get<int>(), j.at("counts").at(1).get<int>()};
    m.class_labels = {j.at("class_labels").at(0).get<std::string>(),
                      j.at("class_labels").at(1).get<std::string>()};
    m.zeta_hat = detail::vec_from_json(j.at("zeta_hat"), "zeta_hat");
    m.selected = j.at("selected").get<IndexSet>();
    m.midpoint = detail::vec_from_json(j.at("midpoint"), "midpoint");
    m.prior_offset = j.at("prior_offset").get<double>();
    m.score_offset = j.at("score_offset").get<double>();
    const auto& js = j.at("selection_mode");
    if (js.at("kind") == "top_s") {
      m.selection = SelectionMode::top_s(js.at("s").get<int>());
    } else if (js.at("kind") == "threshold") {
      m.selection = SelectionMode::threshold(js.at("C").get<double>(),
                                             js.at("alpha").get<double>(),
                                             js.at("fallback_top1").get<bool>());
      m.t_n = js.at("t_n").get<double>();
    } else {
      throw SchemaError("model: unknown selection_mode kind");
    }
    if (j.contains("feature_offset"))
      m.feature_offset = detail::vec_from_json(j.at("feature_offset"), "feature_offset");
    if (m.zeta_hat.size() != p || m.midpoint.size() != p || m.selected.empty())
      throw SchemaError("model: inconsistent field sizes");
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model: malformed document: ") + e.what());
  }
}

inline void save_model(const PCLDAModel& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("model: cannot write '" + path + "'");
  out << model_to_json(m).dump(1) << '\n';
}

inline PCLDAModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("model: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model: invalid JSON: ") + e.what());
  }
  return model_from_json(j);
}

}  // namespace spikelda
