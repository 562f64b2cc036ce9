#pragma once

// JSON model files (schema_version 1).
//
// Matrices are {"rows": r, "cols": c, "data": [row-major values]}. Doubles are
// written in shortest round-trip form, so load(save(model)) is bit-exact.

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "planarcda/error.hpp"
#include "planarcda/models.hpp"

namespace planarcda {

using Json = nlohmann::json;

inline constexpr int kModelSchemaVersion = 1;

inline Json to_json(const Mat& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Mat mat_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const Json& data = j.at("data");
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw IoError("model: matrix data length does not match rows x cols");
  }
  Mat m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
  }
  return m;
}

inline Json vec_to_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vec vec_from_json(const Json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

namespace detail {

inline Json projection_json(const ProjectionPair& p) {
  return Json{
      {"projections",
       {{"left_x", to_json(p.left_x)},
        {"right_x", to_json(p.right_x)},
        {"left_y", to_json(p.left_y)},
        {"right_y", to_json(p.right_y)}}},
      {"correlations", {{"left", vec_to_json(p.left_correlations)}, {"right", vec_to_json(p.right_correlations)}}},
      {"solver",
       {{"iterations_run", p.iterations_run},
        {"converged", p.converged},
        {"correlation_trace", p.correlation_trace}}},
      {"contexts",
       {{"left_rx", to_json(p.left_context_rx)},
        {"left_ry", to_json(p.left_context_ry)},
        {"right_lx", to_json(p.right_context_lx)},
        {"right_ly", to_json(p.right_context_ly)}}},
  };
}

inline ProjectionPair projection_from_json(const Json& j) {
  ProjectionPair p;
  const Json& pr = j.at("projections");
  p.left_x = mat_from_json(pr.at("left_x"));
  p.right_x = mat_from_json(pr.at("right_x"));
  p.left_y = mat_from_json(pr.at("left_y"));
  p.right_y = mat_from_json(pr.at("right_y"));
  p.left_correlations = vec_from_json(j.at("correlations").at("left"));
  p.right_correlations = vec_from_json(j.at("correlations").at("right"));
  const Json& s = j.at("solver");
  p.iterations_run = s.at("iterations_run").get<int>();
  p.converged = s.at("converged").get<bool>();
  p.correlation_trace = s.at("correlation_trace").get<std::vector<double>>();
  const Json& c = j.at("contexts");
  p.left_context_rx = mat_from_json(c.at("left_rx"));
  p.left_context_ry = mat_from_json(c.at("left_ry"));
  p.right_context_lx = mat_from_json(c.at("right_lx"));
  p.right_context_ly = mat_from_json(c.at("right_ly"));
  return p;
}

inline Json branch_json(const Branch& b) {
  return Json{{"left", to_json(b.left)},
              {"right", to_json(b.right)},
              {"objective_trace", b.objective_trace},
              {"iterations", b.iterations},
              {"converged", b.converged},
              {"ridge", b.ridge}};
}

inline Branch branch_from_json(const Json& j) {
  Branch b;
  b.left = mat_from_json(j.at("left"));
  b.right = mat_from_json(j.at("right"));
  b.objective_trace = j.at("objective_trace").get<std::vector<double>>();
  b.iterations = j.at("iterations").get<int>();
  b.converged = j.at("converged").get<bool>();
  b.ridge = j.at("ridge").get<double>();
  return b;
}

inline Json shapes_json(const Mat& mx, const Mat& my, const ProjectionPair& p) {
  return Json{{"m", mx.rows()}, {"n", mx.cols()}, {"p", my.rows()}, {"q", my.cols()}, {"d1", p.d1()}, {"d2", p.d2()}};
}

}  // namespace detail

inline Json model_to_json(const FittedModel& model) {
  Json j;
  j["schema_version"] = kModelSchemaVersion;
  j["method"] = method_key(model_method(model));
  if (const auto* c = std::get_if<CorrelationModel>(&model)) {
    j["shapes"] = detail::shapes_json(c->mean_x, c->mean_y, c->proj);
    j["means"] = {{"x", to_json(c->mean_x)}, {"y", to_json(c->mean_y)}};
    j.update(detail::projection_json(c->proj));
    if (c->method == Method::l2dcca) j["sigma"] = c->sigma;
  } else if (const auto* d = std::get_if<CdtrlModel>(&model)) {
    j["mode"] = mode_key(d->mode);
    j["classes"] = d->classes;
    j["shapes"] = detail::shapes_json(d->mean_x, d->mean_y, d->base);
    j["means"] = {{"x", to_json(d->mean_x)}, {"y", to_json(d->mean_y)}};
    j.update(detail::projection_json(d->base));
    j["range_branch"] = detail::branch_json(d->range);
    j["null_branch"] = detail::branch_json(d->null);
    j["converged"] = d->converged;
  } else {
    const auto& b = std::get<BaselineModel>(model);
    const char* view = b.view == View::x ? "x" : "y";
    j["view"] = view;
    j["shapes"] = {{"m", b.model.mean.rows()}, {"n", b.model.mean.cols()}, {"width", b.model.width()}};
    j["means"] = {{view, to_json(b.model.mean)}};
    j["projection"] = to_json(b.model.projection);
    j["eigenvalues"] = vec_to_json(b.model.eigenvalues);
  }
  return j;
}

inline FittedModel model_from_json(const Json& j) {
  try {
    const int version = j.at("schema_version").get<int>();
    if (version != kModelSchemaVersion) {
      throw IoError("model: unsupported schema_version " + std::to_string(version));
    }
    const Method method = parse_method(j.at("method").get<std::string>());
    if (method == Method::cdtrl) {
      CdtrlModel d;
      d.mode = parse_mode(j.at("mode").get<std::string>());
      d.classes = j.at("classes").get<int>();
      d.mean_x = mat_from_json(j.at("means").at("x"));
      d.mean_y = mat_from_json(j.at("means").at("y"));
      d.base = detail::projection_from_json(j);
      d.range = detail::branch_from_json(j.at("range_branch"));
      d.null = detail::branch_from_json(j.at("null_branch"));
      d.converged = j.at("converged").get<bool>();
      return d;
    }
    if (single_view(method)) {
      BaselineModel b;
      const std::string view = j.at("view").get<std::string>();
      if (view != "x" && view != "y") throw IoError("model: view must be 'x' or 'y'");
      b.view = view == "x" ? View::x : View::y;
      b.model.kind = method == Method::pca       ? BaselineKind::pca
                     : method == Method::twodpca ? BaselineKind::twodpca
                     : method == Method::lda     ? BaselineKind::lda
                                                 : BaselineKind::twodlda;
      b.model.mean = mat_from_json(j.at("means").at(view));
      b.model.projection = mat_from_json(j.at("projection"));
      b.model.eigenvalues = vec_from_json(j.at("eigenvalues"));
      return b;
    }
    CorrelationModel c;
    c.method = method;
    c.mean_x = mat_from_json(j.at("means").at("x"));
    c.mean_y = mat_from_json(j.at("means").at("y"));
    c.proj = detail::projection_from_json(j);
    if (method == Method::l2dcca) c.sigma = j.at("sigma").get<double>();
    return c;
  } catch (const Json::exception& e) {
    throw IoError(std::string("model: ") + e.what());
  }
}

inline std::string serialize_model(const FittedModel& model) { return model_to_json(model).dump(2) + "\n"; }

inline FittedModel parse_model(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string("model: ") + e.what());
  }
  return model_from_json(j);
}

inline void save_model(const std::string& path, const FittedModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_model(model);
  if (!out) throw IoError("write failed: " + path);
}

inline FittedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace planarcda
