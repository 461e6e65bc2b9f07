#include "fts/serialize.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fts {

namespace fs = std::filesystem;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) throw Error(Errc::Parse, std::string(what) + ": expected [x, y, z]");
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    if (!j[i].is_number()) throw Error(Errc::Parse, std::string(what) + ": expected numbers");
    v[i] = j[i].get<double>();
  }
  return v;
}

const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::Parse, std::string("missing field '") + key + "'");
  return j.at(key);
}

double number(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number()) throw Error(Errc::Parse, std::string("field '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_number_integer()) throw Error(Errc::Parse, std::string("field '") + key + "' must be an integer");
  return v.get<int>();
}

json nullable(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string method_key(Method m) {
  switch (m) {
    case Method::JointsOnly: return "J";
    case Method::JointsSilhouette: return "J+S";
    case Method::DepthSearch: return "J+S+DS";
    case Method::OracleDepth: return "D";
  }
  return "?";
}

}  // namespace

// ---------------------------------------------------------------------------

json to_json(const Skeleton& sk) {
  json joints = json::array();
  for (int j = 0; j < kNumJoints; ++j) {
    json lb = json::array(), rb = json::array();
    for (int b = 0; b < kNumBetas; ++b) {
      lb.push_back(sk.length_basis(j, b));
      rb.push_back(sk.radius_basis(j, b));
    }
    joints.push_back({{"name", std::string(sk.names[j])},
                      {"parent", sk.parent[j]},
                      {"offset", vec(sk.offset[j])},
                      {"radius", sk.radius_template[j]},
                      {"length_basis", lb},
                      {"radius_basis", rb}});
  }
  json hb = json::array(), sb = json::array();
  for (int b = 0; b < kNumBetas; ++b) {
    hb.push_back(sk.head_cap_basis(b));
    sb.push_back(sk.sole_basis(b));
  }
  return {{"schema", kSchemaVersion},
          {"joints", joints},
          {"head_cap", sk.head_cap},
          {"head_cap_basis", hb},
          {"sole", sk.sole},
          {"sole_basis", sb},
          {"template_height", sk.template_height},
          {"length_scale_coeff", sk.length_scale_coeff},
          {"radius_scale_coeff", sk.radius_scale_coeff},
          {"min_size", sk.min_size}};
}

json to_json(const ShapeParams& shape) {
  json b = json::array();
  for (int i = 0; i < kNumBetas; ++i) b.push_back(shape.beta(i));
  return {{"beta", b}};
}

json to_json(const PoseParams& pose) {
  json rots = json::array();
  for (const auto& r : pose.joint_rots) rots.push_back(vec(r));
  return {{"root_orient", vec(pose.root_orient)}, {"joint_rots", rots}};
}

json to_json(const CameraPose& c) {
  return {{"translation", vec(c.translation)}, {"focal", c.focal}, {"image", {{"w", c.image.width}, {"h", c.image.height}}}};
}

json to_json(const TermEnergies& e) {
  return {{"joints", e.joints}, {"height", e.height}, {"prior", e.prior}, {"silhouette", e.silhouette}};
}

json to_json(const FitResult& r) {
  json cand = json::array();
  for (double e : r.candidate_energies) cand.push_back(nullable(e));
  return {{"shape", to_json(r.shape)},
          {"pose", to_json(r.pose)},
          {"camera", to_json(r.camera)},
          {"energies", to_json(r.energies)},
          {"energy_total", r.energy_total},
          {"converged", r.converged},
          {"depth_candidate_index", r.depth_candidate_index},
          {"depth_candidates", r.depth_candidates},
          {"candidate_energies", cand}};
}

json to_json(const MultiFitResult& r) {
  json poses = json::array(), cams = json::array();
  for (const auto& p : r.poses) poses.push_back(to_json(p));
  for (const auto& c : r.cameras) cams.push_back(to_json(c));
  return {{"shape", to_json(r.shape)}, {"kept", r.kept},          {"poses", poses},
          {"cameras", cams},           {"energies", to_json(r.energies)}, {"energy_total", r.energy_total},
          {"converged", r.converged}};
}

json to_json(const FitConfig& c) {
  return {{"sigma_gm", c.sigma_gm},
          {"sigma_reference_width", c.sigma_reference_width},
          {"lambda_joints", c.lambda_joints},
          {"lambda_silhouette", c.lambda_silhouette},
          {"lambda_height", c.lambda_height},
          {"lambda_pose", c.lambda_pose},
          {"lambda_shape", c.lambda_shape},
          {"lambda_limit", c.lambda_limit},
          {"lambda_inside", c.lambda_inside},
          {"lambda_outside", c.lambda_outside},
          {"pyramid_levels", c.pyramid_levels},
          {"n_depth", c.n_depth},
          {"depth_range", c.depth_range},
          {"max_iters", c.max_iters},
          {"grad_tol", c.grad_tol},
          {"rel_f_tol", c.rel_f_tol},
          {"sharpness", c.sharpness},
          {"use_silhouette", c.use_silhouette},
          {"refine_sharpness", c.refine_sharpness},
          {"refine_levels", c.refine_levels}};
}

json to_json(const BenchGenConfig& c) {
  return {{"seed", c.seed},
          {"image", {{"w", c.image.width}, {"h", c.image.height}}},
          {"n_subjects", c.n_subjects},
          {"n_views", c.n_views},
          {"depth", c.depth},
          {"azimuth_range", c.azimuth_range},
          {"jitter_deg", c.jitter_deg},
          {"shape_std", c.shape_std}};
}

ShapeParams shape_from_json(const json& j) {
  const json& b = field(j, "beta");
  if (!b.is_array() || b.size() != kNumBetas) throw Error(Errc::Parse, "beta must hold 10 numbers");
  ShapeParams s;
  for (int i = 0; i < kNumBetas; ++i) {
    if (!b[i].is_number()) throw Error(Errc::Parse, "beta must hold 10 numbers");
    s.beta(i) = b[i].get<double>();
  }
  return s;
}

PoseParams pose_from_json(const json& j) {
  PoseParams p;
  p.root_orient = vec3_from(field(j, "root_orient"), "root_orient");
  const json& rots = field(j, "joint_rots");
  if (!rots.is_array() || rots.size() != kNumJoints) throw Error(Errc::Parse, "joint_rots must hold 17 rotations");
  for (int i = 0; i < kNumJoints; ++i) p.joint_rots[i] = vec3_from(rots[i], "joint_rots");
  return p;
}

namespace {

CameraPose camera_from_json(const json& j, ImageSize image) {
  CameraPose c;
  c.image = image;
  c.translation = vec3_from(field(j, "translation"), "camera.translation");
  c.focal = j.contains("focal") ? number(j, "focal") : default_focal(image);
  if (!(c.focal > 0.0)) throw Error(Errc::Parse, "camera.focal must be positive");
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

json scene_json(const Observation& obs, const std::string& mask_path, const std::optional<CameraPose>& camera) {
  json joints = json::array();
  for (int d = 0; d < kNumDetections; ++d)
    joints.push_back(json::array({obs.joints.points[d].x(), obs.joints.points[d].y(), obs.joints.confidence[d]}));
  json j = {{"image", {{"w", obs.image.width}, {"h", obs.image.height}}}, {"joints", joints}, {"mask", mask_path}};
  if (camera) j["camera"] = {{"translation", vec(camera->translation)}, {"focal", camera->focal}};
  return j;
}

Scene load_scene(const fs::path& path) {
  const json j = read_json(path);
  try {
    Scene s;
    const json& img = field(j, "image");
    s.obs.image = {integer(img, "w"), integer(img, "h")};
    if (s.obs.image.width < 1 || s.obs.image.height < 1) throw Error(Errc::Parse, "image size must be positive");
    const json& joints = field(j, "joints");
    if (!joints.is_array() || joints.size() != kNumDetections)
      throw Error(Errc::Parse, "joints must hold 14 [u, v, conf] triples");
    for (int d = 0; d < kNumDetections; ++d) {
      const json& t = joints[d];
      if (!t.is_array() || t.size() != 3 || !t[0].is_number() || !t[1].is_number() || !t[2].is_number())
        throw Error(Errc::Parse, "joints must hold 14 [u, v, conf] triples");
      s.obs.joints.points[d] = Vec2(t[0].get<double>(), t[1].get<double>());
      s.obs.joints.confidence[d] = t[2].get<double>();
    }
    const json& mask = field(j, "mask");
    if (!mask.is_string()) throw Error(Errc::Parse, "mask must be a path");
    s.obs.mask = read_mask(path.parent_path() / mask.get<std::string>());
    if (j.contains("camera") && !j.at("camera").is_null()) s.camera = camera_from_json(j.at("camera"), s.obs.image);
    return s;
  } catch (const Error& e) {
    if (e.code() == Errc::Parse) throw Error(Errc::Parse, path.string() + ": " + e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------

CategoryVocabulary ClothConfig::vocab() const {
  return vocabulary ? CategoryVocabulary(*vocabulary) : CategoryVocabulary::default_vocabulary();
}

json to_json(const ClothConfig& c) {
  json j = {{"bandwidth", c.bandwidth ? json(*c.bandwidth) : json(nullptr)}, {"threshold", c.threshold}};
  j["vocabulary"] = c.vocab().names();
  return j;
}

void apply_fit_overrides(FitConfig& c, const json& j) {
  if (!j.is_object()) throw Error(Errc::Parse, "config 'fit' must be an object");
  for (const auto& [key, value] : j.items()) {
    auto num = [&](double& dst) {
      if (!value.is_number()) throw Error(Errc::Parse, "config key '" + key + "' must be a number");
      dst = value.get<double>();
    };
    auto integer_key = [&](int& dst) {
      if (!value.is_number_integer()) throw Error(Errc::Parse, "config key '" + key + "' must be an integer");
      dst = value.get<int>();
    };
    if (key == "sigma_gm") num(c.sigma_gm);
    else if (key == "sigma_reference_width") num(c.sigma_reference_width);
    else if (key == "lambda_joints") num(c.lambda_joints);
    else if (key == "lambda_silhouette") num(c.lambda_silhouette);
    else if (key == "lambda_height") num(c.lambda_height);
    else if (key == "lambda_pose") num(c.lambda_pose);
    else if (key == "lambda_shape") num(c.lambda_shape);
    else if (key == "lambda_limit") num(c.lambda_limit);
    else if (key == "lambda_inside") num(c.lambda_inside);
    else if (key == "lambda_outside") num(c.lambda_outside);
    else if (key == "pyramid_levels") integer_key(c.pyramid_levels);
    else if (key == "n_depth") integer_key(c.n_depth);
    else if (key == "depth_range") num(c.depth_range);
    else if (key == "max_iters") integer_key(c.max_iters);
    else if (key == "grad_tol") num(c.grad_tol);
    else if (key == "rel_f_tol") num(c.rel_f_tol);
    else if (key == "sharpness") num(c.sharpness);
    else if (key == "refine_sharpness") num(c.refine_sharpness);
    else if (key == "refine_levels") integer_key(c.refine_levels);
    else if (key == "use_silhouette") {
      if (!value.is_boolean()) throw Error(Errc::Parse, "config key 'use_silhouette' must be a boolean");
      c.use_silhouette = value.get<bool>();
    } else {
      throw Error(Errc::Parse, "unknown config key 'fit." + key + "'");
    }
  }
  c.validate();
}

void apply_cloth_overrides(ClothConfig& c, const json& j) {
  if (!j.is_object()) throw Error(Errc::Parse, "config 'clothmodel' must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "bandwidth") {
      if (value.is_null()) {
        c.bandwidth.reset();
        continue;
      }
      if (!value.is_number() || !(value.get<double>() > 0.0))
        throw Error(Errc::Parse, "config key 'bandwidth' must be a positive number");
      c.bandwidth = value.get<double>();
    } else if (key == "threshold") {
      if (!value.is_number()) throw Error(Errc::Parse, "config key 'threshold' must be a number");
      c.threshold = value.get<double>();
    } else if (key == "vocabulary") {
      if (!value.is_array()) throw Error(Errc::Parse, "config key 'vocabulary' must be a list of names");
      std::vector<std::string> names;
      for (const auto& n : value) {
        if (!n.is_string()) throw Error(Errc::Parse, "config key 'vocabulary' must be a list of names");
        names.push_back(n.get<std::string>());
      }
      CategoryVocabulary check(names);
      c.vocabulary = std::move(names);
    } else {
      throw Error(Errc::Parse, "unknown config key 'clothmodel." + key + "'");
    }
  }
}

RunConfig load_run_config(const fs::path& path) {
  const json j = read_json(path);
  if (!j.is_object()) throw Error(Errc::Parse, path.string() + ": config must be an object");
  RunConfig rc;
  for (const auto& [key, value] : j.items()) {
    if (key == "fit") apply_fit_overrides(rc.fit, value);
    else if (key == "clothmodel") apply_cloth_overrides(rc.cloth, value);
    else throw Error(Errc::Parse, path.string() + ": unknown config key '" + key + "'");
  }
  return rc;
}

// ---------------------------------------------------------------------------

json truth_json(const std::vector<BenchSubject>& subjects, const BenchGenConfig& config, double noise) {
  json subs = json::array();
  for (const auto& s : subjects) {
    json views = json::array();
    for (const auto& v : s.views) {
      views.push_back({{"view", v.view_index},
                       {"azimuth_deg", v.azimuth_deg},
                       {"scene", "subject_" + std::to_string(s.subject_id) + "/view_" + std::to_string(v.view_index) +
                                     "/scene.json"},
                       {"pose", to_json(v.true_pose)},
                       {"camera", to_json(v.true_camera)}});
    }
    subs.push_back({{"subject_id", s.subject_id}, {"mu", s.mu}, {"shape", to_json(s.true_shape)}, {"views", views}});
  }
  return {{"schema", kSchemaVersion}, {"config", to_json(config)}, {"noise", noise}, {"subjects", subs}};
}

void write_benchmark(const fs::path& dir, const std::vector<BenchSubject>& subjects, const BenchGenConfig& config,
                     double noise) {
  for (const auto& s : subjects) {
    for (const auto& v : s.views) {
      const fs::path vdir = dir / ("subject_" + std::to_string(s.subject_id)) / ("view_" + std::to_string(v.view_index));
      std::error_code ec;
      fs::create_directories(vdir, ec);
      if (ec) throw Error(Errc::Io, "cannot create " + vdir.string() + ": " + ec.message());
      write_pgm(vdir / "mask.pgm", v.obs.mask);
      write_text(vdir / "scene.json", scene_json(v.obs, "mask.pgm", v.true_camera).dump(2) + "\n");
    }
  }
  write_text(dir / "truth.json", truth_json(subjects, config, noise).dump(2) + "\n");
}

std::vector<BenchSubject> load_benchmark(const fs::path& dir) {
  const fs::path truth_path = dir / "truth.json";
  if (!fs::exists(truth_path)) throw Error(Errc::Io, "missing " + truth_path.string());
  const json truth = read_json(truth_path);
  std::vector<BenchSubject> subjects;
  try {
    for (const json& sj : field(truth, "subjects")) {
      BenchSubject s;
      s.subject_id = integer(sj, "subject_id");
      s.mu = number(sj, "mu");
      s.true_shape = shape_from_json(field(sj, "shape"));
      for (const json& vj : field(sj, "views")) {
        BenchView v;
        v.view_index = integer(vj, "view");
        v.azimuth_deg = number(vj, "azimuth_deg");
        v.true_pose = pose_from_json(field(vj, "pose"));
        const json& cj = field(vj, "camera");
        const json& img = field(cj, "image");
        v.true_camera = camera_from_json(cj, {integer(img, "w"), integer(img, "h")});
        const json& scene = field(vj, "scene");
        if (!scene.is_string()) throw Error(Errc::Parse, "scene must be a path");
        v.obs = load_scene(dir / scene.get<std::string>()).obs;
        s.views.push_back(std::move(v));
      }
      subjects.push_back(std::move(s));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::Parse) throw Error(Errc::Parse, truth_path.string() + ": " + e.what());
    throw;
  }
  return subjects;
}

// ---------------------------------------------------------------------------

namespace {

std::optional<double> multi_at(const MethodReport* m, const std::vector<int>& ks, int k) {
  if (!m) return std::nullopt;
  for (size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k && i < m->multi.size()) return m->multi[i];
  return std::nullopt;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::vector<OrderingCheck> ordering_checks(const BenchReport& report) {
  std::vector<OrderingCheck> out;
  const MethodReport* js = report.find(Method::JointsSilhouette);
  const MethodReport* ds = report.find(Method::DepthSearch);
  const MethodReport* od = report.find(Method::OracleDepth);

  OrderingCheck c1{"depth_search_beats_fixed_depth", false, "missing methods"};
  if (js && ds && std::isfinite(js->single_view) && std::isfinite(ds->single_view)) {
    c1.pass = ds->single_view <= 0.95 * js->single_view;
    c1.detail = "single-view J+S+DS " + fmt(ds->single_view) + " vs J+S " + fmt(js->single_view) + " (needs <= 95%)";
  }
  out.push_back(c1);

  OrderingCheck c2{"multi_k5_beats_single_view", false, "missing cells"};
  const auto k5 = multi_at(ds, report.ks, 5);
  if (ds && k5 && std::isfinite(ds->single_view)) {
    c2.pass = *k5 <= 0.97 * ds->single_view;
    c2.detail = "k=5 " + fmt(*k5) + " vs single-view " + fmt(ds->single_view) + " (needs <= 97%)";
  }
  out.push_back(c2);

  OrderingCheck c3{"multi_k5_not_worse_than_k7", false, "missing cells"};
  const auto k7 = multi_at(ds, report.ks, 7);
  if (k5 && k7) {
    c3.pass = *k5 <= *k7 + 0.02;
    c3.detail = "k=5 " + fmt(*k5) + " vs k=7 " + fmt(*k7) + " + 0.02";
  }
  out.push_back(c3);

  for (int k : {1, 3, 5}) {
    OrderingCheck c{"oracle_depth_bound_k" + std::to_string(k), false, "missing cells"};
    const auto d = multi_at(od, report.ks, k);
    const auto e = multi_at(ds, report.ks, k);
    if (d && e) {
      c.pass = *d <= *e + 0.05;
      c.detail = "oracle " + fmt(*d) + " vs estimated " + fmt(*e) + " + 0.05";
    }
    out.push_back(c);
  }

  OrderingCheck c4{"no_failed_fits", true, "all cells fitted"};
  for (const auto& m : report.methods) {
    if (m.failed_fits > 0) {
      c4.pass = false;
      c4.detail = method_key(m.method) + " has " + std::to_string(m.failed_fits) + " failed fits";
      break;
    }
  }
  out.push_back(c4);
  return out;
}

json report_json(const BenchReport& report, const FitConfig& config, const std::vector<OrderingCheck>& checks) {
  json methods = json::array();
  for (const auto& m : report.methods) {
    json multi = json::array();
    for (size_t i = 0; i < report.ks.size(); ++i) {
      const auto& v = i < m.multi.size() ? m.multi[i] : std::nullopt;
      multi.push_back({{"k", report.ks[i]}, {"error", v ? json(*v) : json(nullptr)}});
    }
    json per_view = json::array();
    for (double v : m.per_view) per_view.push_back(nullable(v));
    json singles = json::array();
    for (const auto& row : m.single_errors) {
      json r = json::array();
      for (double v : row) r.push_back(nullable(v));
      singles.push_back(r);
    }
    methods.push_back({{"method", method_key(m.method)},
                       {"description", method_name(m.method)},
                       {"single_view", nullable(m.single_view)},
                       {"multi", multi},
                       {"per_view", per_view},
                       {"single_errors", singles},
                       {"failed_fits", m.failed_fits}});
  }
  json cj = json::array();
  for (const auto& c : checks) cj.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  return {{"schema", kSchemaVersion},
          {"config", to_json(config)},
          {"ks", report.ks},
          {"azimuths_deg", report.azimuths},
          {"methods", methods},
          {"checks", cj}};
}

std::string report_csv(const BenchReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "method,k,multi_error,single_view_error,failed_fits\n";
  for (const auto& m : report.methods) {
    for (size_t i = 0; i < report.ks.size(); ++i) {
      os << method_key(m.method) << ',' << report.ks[i] << ',';
      if (i < m.multi.size() && m.multi[i]) os << *m.multi[i];
      os << ',';
      if (std::isfinite(m.single_view)) os << m.single_view;
      os << ',' << m.failed_fits << '\n';
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string group_code(Group g) {
  switch (g) {
    case Group::Average: return "a";
    case Group::Plus: return "p";
    case Group::Unlabeled: return "";
  }
  return "";
}

}  // namespace

std::vector<UserRecord> parse_users_csv(const std::string& text, const CategoryVocabulary& vocab) {
  std::istringstream in(text);
  std::string line;
  int row = 0;
  auto fail = [&](const std::string& msg) { throw Error(Errc::Parse, "users CSV row " + std::to_string(row) + ": " + msg); };
  if (!std::getline(in, line)) {
    row = 1;
    fail("missing header");
  }
  ++row;
  if (trim(line) != "user_id,group,beta2,post_id,categories") fail("header must be user_id,group,beta2,post_id,categories");
  std::vector<UserRecord> users;
  std::map<std::string, size_t> index;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cols = split(line, ',');
    if (cols.size() != 5) fail("expected 5 columns, found " + std::to_string(cols.size()));
    const std::string id = trim(cols[0]);
    if (id.empty()) fail("empty user_id");
    const std::string g = trim(cols[1]);
    Group group;
    if (g == "a") group = Group::Average;
    else if (g == "p") group = Group::Plus;
    else if (g.empty()) group = Group::Unlabeled;
    else fail("group must be 'a', 'p' or empty");
    std::optional<double> beta2;
    const std::string b = trim(cols[2]);
    if (!b.empty()) {
      size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(b, &pos);
      } catch (const std::exception&) {
        fail("beta2 is not a number");
      }
      if (pos != b.size() || !std::isfinite(v)) fail("beta2 is not a finite number");
      beta2 = v;
    }
    Post post;
    const std::string cats = trim(cols[4]);
    if (!cats.empty()) {
      for (const auto& name : split(cats, ';')) {
        const int c = vocab.index(trim(name));
        if (c < 0) fail("unknown category '" + trim(name) + "'");
        post.insert(c);
      }
    }
    auto it = index.find(id);
    if (it == index.end()) {
      index.emplace(id, users.size());
      users.push_back({id, group, beta2, {}});
      it = index.find(id);
    }
    UserRecord& u = users[it->second];
    if (u.group != group) fail("group differs from earlier rows of user '" + id + "'");
    if (u.beta2.has_value() != beta2.has_value() || (beta2 && *u.beta2 != *beta2))
      fail("beta2 differs from earlier rows of user '" + id + "'");
    u.posts.push_back(std::move(post));
  }
  return users;
}

std::vector<UserRecord> load_users_csv(const fs::path& path, const CategoryVocabulary& vocab) {
  try {
    return parse_users_csv(read_text(path), vocab);
  } catch (const Error& e) {
    if (e.code() == Errc::Parse) throw Error(Errc::Parse, path.string() + ": " + e.what());
    throw;
  }
}

std::string users_csv(const std::vector<UserRecord>& users, const CategoryVocabulary& vocab) {
  std::ostringstream os;
  os.precision(17);
  os << "user_id,group,beta2,post_id,categories\n";
  for (const auto& u : users) {
    for (size_t p = 0; p < u.posts.size(); ++p) {
      os << u.user_id << ',' << group_code(u.group) << ',';
      if (u.beta2) os << *u.beta2;
      os << ',' << u.user_id << "_" << p << ',';
      bool first = true;
      for (int c : u.posts[p]) {
        if (!first) os << ';';
        os << vocab.name(c);
        first = false;
      }
      os << '\n';
    }
  }
  return os.str();
}

void fill_shapes(std::vector<UserRecord>& users, const json& shapes) {
  if (!shapes.is_object()) throw Error(Errc::Parse, "shapes JSON must map user ids to beta2 or fit results");
  for (auto& u : users) {
    if (u.beta2 || !shapes.contains(u.user_id)) continue;
    const json& v = shapes.at(u.user_id);
    if (v.is_number()) {
      u.beta2 = v.get<double>();
    } else if (v.is_object()) {
      u.beta2 = shape_from_json(field(v, "shape")).beta(1);
    } else {
      throw Error(Errc::Parse, "shape entry for '" + u.user_id + "' must be a number or a fit result");
    }
  }
}

// ---------------------------------------------------------------------------

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(Errc::Io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(Errc::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(Errc::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

json read_json(const fs::path& path) {
  const std::string text = read_text(path);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::Parse, path.string() + ": " + e.what());
  }
}

}  // namespace fts
