#include "krrstream/serialize.hpp"

#include <utility>
#include <vector>

#include <json.hpp>

namespace krr {

namespace {

using nlohmann::json;

constexpr const char* kFormatTag = "krrstream-model";
constexpr int kFormatVersion = 1;

json vector_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json kernel_to_json(const KernelSpec& spec) {
  json out;
  switch (spec.family()) {
    case KernelFamily::Polynomial:
      out["family"] = "polynomial";
      out["degree"] = spec.degree();
      break;
    case KernelFamily::RBF:
      out["family"] = "rbf";
      out["radius"] = spec.radius();
      break;
  }
  return out;
}

json header(const char* space, const KernelSpec& spec) {
  json out;
  out["format"] = kFormatTag;
  out["version"] = kFormatVersion;
  out["space"] = space;
  out["kernel"] = kernel_to_json(spec);
  return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& v : j) out(i++) = v.get<double>();
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index cols_hint = -1) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = cols_hint;
  if (rows > 0) cols = static_cast<Eigen::Index>(j.front().size());
  if (cols < 0) {
    throw ParseError("model snapshot: matrix with unknown column count");
  }
  Eigen::MatrixXd out(rows, cols);
  Eigen::Index r = 0;
  for (const auto& row : j) {
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw ParseError("model snapshot: ragged matrix rows");
    }
    Eigen::Index c = 0;
    for (const auto& v : row) out(r, c++) = v.get<double>();
    ++r;
  }
  return out;
}

std::vector<SampleId> ids_from_json(const json& j) {
  std::vector<SampleId> out;
  out.reserve(j.size());
  for (const auto& v : j) out.push_back(v.get<SampleId>());
  return out;
}

KernelSpec kernel_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "polynomial") {
    return KernelSpec::polynomial(j.at("degree").get<int>());
  }
  if (family == "rbf") {
    return KernelSpec::rbf(j.at("radius").get<double>());
  }
  throw ParseError("model snapshot: unknown kernel family '" + family + "'");
}

json parse_checked(const std::string& text, const char* space) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model snapshot: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kFormatTag) {
    throw ParseError("model snapshot: missing format tag");
  }
  if (j.value("version", -1) != kFormatVersion) {
    throw ParseError("model snapshot: unsupported version");
  }
  if (space != nullptr && j.value("space", "") != space) {
    throw ParseError("model snapshot: expected space '" + std::string(space) +
                     "', found '" + j.value("space", "") + "'");
  }
  return j;
}

/// Column-per-sample blocks are stored transposed (one row per sample) so a
/// snapshot reads as a list of samples.
json columns_to_json(const Eigen::MatrixXd& m) {
  return matrix_to_json(m.transpose());
}

Eigen::MatrixXd columns_from_json(const json& j, Eigen::Index rows_hint) {
  return matrix_from_json(j, rows_hint).transpose();
}

}  // namespace

std::string serialize(const IntrinsicModel& model) {
  json j = header("intrinsic", model.kernel());
  json state;
  state["ridge"] = model.ridge();
  state["input_dim"] = model.input_dim();
  state["s_inv"] = matrix_to_json(model.s_inverse().mat());
  state["p"] = vector_to_json(model.label_moment());
  state["s"] = vector_to_json(model.feature_sum());
  state["u"] = vector_to_json(model.weights());
  state["b"] = model.bias();
  state["ids"] = model.sample_ids();
  state["features"] = columns_to_json(model.sample_features());
  state["labels"] = vector_to_json(model.sample_labels());
  j["state"] = std::move(state);
  return j.dump(2);
}

std::string serialize(const EmpiricalModel& model) {
  json j = header("empirical", model.kernel());
  json state;
  state["ridge"] = model.ridge();
  state["q_inv"] = matrix_to_json(model.q_inverse().mat());
  state["a"] = vector_to_json(model.dual_coefficients());
  state["b"] = model.bias();
  state["ids"] = model.sample_ids();
  state["x"] = columns_to_json(model.samples());
  state["y"] = vector_to_json(model.labels());
  j["state"] = std::move(state);
  return j.dump(2);
}

std::string serialize(const BayesPosterior& posterior) {
  json j = header("bayes", posterior.kernel());
  json state;
  state["input_dim"] = posterior.input_dim();
  state["prior"] = {{"mu_u", vector_to_json(posterior.prior().mu_u)},
                    {"sigma_u2", posterior.prior().sigma_u2},
                    {"sigma_b2", posterior.prior().sigma_b2}};
  state["mu"] = vector_to_json(posterior.mean());
  state["sigma"] = matrix_to_json(posterior.covariance().mat());
  state["gram"] = matrix_to_json(posterior.gram().mat());
  state["xy"] = vector_to_json(posterior.label_moment());
  state["ids"] = posterior.sample_ids();
  state["features"] = columns_to_json(posterior.sample_features());
  state["labels"] = vector_to_json(posterior.sample_labels());
  j["state"] = std::move(state);
  return j.dump(2);
}

ModelKind peek_model_kind(const std::string& text) {
  const json j = parse_checked(text, nullptr);
  const std::string space = j.value("space", "");
  if (space == "intrinsic") return ModelKind::Intrinsic;
  if (space == "empirical") return ModelKind::Empirical;
  if (space == "bayes") return ModelKind::Bayes;
  throw ParseError("model snapshot: unknown space '" + space + "'");
}

IntrinsicModel load_intrinsic(const std::string& text) {
  const json j = parse_checked(text, "intrinsic");
  try {
    const json& state = j.at("state");
    const Eigen::MatrixXd s_inv = matrix_from_json(state.at("s_inv"));
    if (s_inv.rows() != s_inv.cols()) {
      throw ParseError("model snapshot: s_inv is not square");
    }
    return IntrinsicModel::restore(
        kernel_from_json(j.at("kernel")), state.at("ridge").get<double>(),
        SymMatrix(s_inv), vector_from_json(state.at("p")),
        vector_from_json(state.at("s")), vector_from_json(state.at("u")),
        state.at("b").get<double>(), ids_from_json(state.at("ids")),
        columns_from_json(state.at("features"), s_inv.rows()),
        vector_from_json(state.at("labels")),
        state.at("input_dim").get<Eigen::Index>());
  } catch (const json::exception& e) {
    throw ParseError(std::string("model snapshot: ") + e.what());
  }
}

EmpiricalModel load_empirical(const std::string& text) {
  const json j = parse_checked(text, "empirical");
  try {
    const json& state = j.at("state");
    const Eigen::MatrixXd q_inv = matrix_from_json(state.at("q_inv"));
    if (q_inv.rows() != q_inv.cols()) {
      throw ParseError("model snapshot: q_inv is not square");
    }
    const Eigen::VectorXd y = vector_from_json(state.at("y"));
    return EmpiricalModel::restore(
        kernel_from_json(j.at("kernel")), state.at("ridge").get<double>(),
        SymMatrix(q_inv), vector_from_json(state.at("a")),
        state.at("b").get<double>(), ids_from_json(state.at("ids")),
        columns_from_json(state.at("x"), -1), y);
  } catch (const json::exception& e) {
    throw ParseError(std::string("model snapshot: ") + e.what());
  }
}

BayesPosterior load_bayes(const std::string& text) {
  const json j = parse_checked(text, "bayes");
  try {
    const json& state = j.at("state");
    const json& prior = state.at("prior");
    const Eigen::MatrixXd sigma = matrix_from_json(state.at("sigma"));
    if (sigma.rows() != sigma.cols()) {
      throw ParseError("model snapshot: sigma is not square");
    }
    return BayesPosterior::restore(
        kernel_from_json(j.at("kernel")),
        state.at("input_dim").get<Eigen::Index>(),
        BayesPrior{vector_from_json(prior.at("mu_u")),
                   prior.at("sigma_u2").get<double>(),
                   prior.at("sigma_b2").get<double>()},
        vector_from_json(state.at("mu")), SymMatrix(sigma),
        SymMatrix(matrix_from_json(state.at("gram"))),
        vector_from_json(state.at("xy")), ids_from_json(state.at("ids")),
        columns_from_json(state.at("features"), sigma.rows()),
        vector_from_json(state.at("labels")));
  } catch (const json::exception& e) {
    throw ParseError(std::string("model snapshot: ") + e.what());
  }
}

}  // namespace krr
