// bones: command-line front end. One subcommand per run, all output under --out.

#include <bones/entropy.hpp>
#include <bones/families.hpp>
#include <bones/parallel.hpp>
#include <bones/q_bones.hpp>
#include <bones/skeleton.hpp>
#include <bones/st_bones.hpp>
#include <bones/symbolic.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace bones;

namespace {

const char* kVersion = "0.1.0";

struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  std::string family = "q";
  int period = 0;
  int n = 1;
  int res = 64;
  int kmax = 12;
  double h0 = 0.5;
  double tol_corr = 1e-11;
  double tol_sym = 1e-12;
  double tol_orbit = 1e-10;
  double v = 0.5, w = 0.5;
  std::string od;
  std::string side = "left";
  std::string out = "out";
  unsigned workers = 1;
  unsigned seed = 1;
  std::string estimator = "lap_growth";

  Family fam() const {
    if (family == "st") return Family::ST;
    if (family == "q") return Family::Q;
    throw io_error("unknown family " + family);
  }
  void validate() const {
    if (!(tol_corr > 0) || !(tol_sym > 0) || !(tol_orbit > 0)) throw io_error("tolerances must be positive");
    if (res < 2) throw io_error("resolution must be at least 2");
    if (workers < 1) throw io_error("worker count must be at least 1");
    fam();
  }
  json echo() const {
    return {{"command", command}, {"family", family}, {"period", period}, {"n", n},
            {"res", res},         {"kmax", kmax},     {"h0", h0},         {"tol_corr", tol_corr},
            {"tol_sym", tol_sym}, {"tol_orbit", tol_orbit}, {"v", v},     {"w", w},
            {"od", od},           {"side", side},     {"workers", workers}, {"seed", seed},
            {"estimator", estimator}};
  }
};

// %.17g keeps every double round-trippable
std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json jnum(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

json point(double v, double w) { return json::array({jnum(v), jnum(w)}); }

class Writer {
 public:
  explicit Writer(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec || !fs::is_directory(dir_)) throw io_error("cannot create output directory " + dir_.string());
  }
  void text(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw io_error("cannot open " + (dir_ / name).string());
    f << body;
    if (!f) throw io_error("write failed for " + name);
    files_.push_back(name);
  }
  void put(const std::string& name, const json& j) { text(name, j.dump(2) + "\n"); }
  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

Side parse_side(const std::string& s) {
  if (s == "left") return Side::left;
  if (s == "right") return Side::right;
  throw io_error("side must be left or right");
}

int half_period(const RunConfig& c) {
  if (c.period < 2 || c.period % 2) throw domain_error("period must be an even number >= 2");
  return c.period / 2;
}

QTraceOptions trace_options(const RunConfig& c) {
  QTraceOptions o;
  o.tol_corr = c.tol_corr;
  return o;
}

json od_json(const OrderData& od) {
  return {{"sigma", od.sigma}, {"tau", od.tau}, {"label", od.str()}};
}

json st_bone_json(const StBone& b) {
  json path = json::array();
  for (const auto& [v, w] : st_path(b)) path.push_back(point(v.to_double(), w.to_double()));
  json exact = {{"v0", b.v0.str()}, {"w0", b.w0.str()}, {"v1", b.v1.str()}, {"v2", b.v2.str()}};
  return {{"family", "st"}, {"side", to_string(b.side)}, {"order_data", od_json(b.od)},
          {"exact", exact}, {"primary", point(b.v0.to_double(), b.w0.to_double())}, {"path", path}};
}

json q_bone_json(const QBone& b) {
  json path = json::array(), verts = json::array();
  for (const auto& p : b.polyline) path.push_back(point(p.v, p.w));
  for (const auto& v : b.vertices) {
    json jv = {{"kind", to_string(v.kind)}, {"p", point(v.p.v, v.p.w)}, {"s", jnum(v.s)}};
    if (v.joint) jv["joint"] = v.joint->str();
    verts.push_back(jv);
  }
  json meta = {{"step_init", jnum(b.meta.step_init)}, {"step_min", jnum(b.meta.step_min)},
               {"accepted", b.meta.accepted},         {"rejected", b.meta.rejected},
               {"max_residual", jnum(b.meta.max_residual)}};
  return {{"family", "q"}, {"side", to_string(b.side)}, {"order_data", od_json(b.od)},
          {"vertices", verts}, {"meta", meta}, {"path", path}};
}

std::string bone_file(Side s, int period, std::size_t idx) {
  return std::string(to_string(s)) + "_p" + std::to_string(period) + "_" + std::to_string(idx) + ".bone.json";
}

// ---------------------------------------------------------------- commands

void cmd_orderdata(const RunConfig& c, Writer& out) {
  if (c.n < 1) throw domain_error("n must be positive");
  json list = json::array();
  for (const auto& od : admissible_order_data(c.n)) list.push_back(od_json(od));
  out.put("orderdata.json", {{"period", 2 * c.n}, {"count", list.size()}, {"order_data", list}});
}

void cmd_bones(const RunConfig& c, Writer& out) {
  int n = half_period(c);
  auto ods = admissible_order_data(n);
  std::vector<json> left(ods.size()), right(ods.size());
  if (c.fam() == Family::ST) {
    for (std::size_t i = 0; i < ods.size(); ++i) {
      left[i] = st_bone_json(st_bone(ods[i], Side::left));
      right[i] = st_bone_json(st_bone(ods[i], Side::right));
    }
  } else {
    auto opt = trace_options(c);
    parallel_for(ods.size(), c.workers, [&](std::size_t i) {
      QBone b = q_trace_bone(ods[i], Side::left, opt);
      left[i] = q_bone_json(b);
      right[i] = q_bone_json(q_trace_bone(ods[i], Side::right, opt));
    });
  }
  for (std::size_t i = 0; i < ods.size(); ++i) {
    out.put(bone_file(Side::left, c.period, i), left[i]);
    out.put(bone_file(Side::right, c.period, i), right[i]);
  }
}

void cmd_trace(const RunConfig& c, Writer& out) {
  if (c.od.empty()) throw io_error("trace needs --od");
  OrderData od = OrderData::parse(c.od);
  if (!check_admissible(od)) throw domain_error("inadmissible order-data " + od.str());
  Side s = parse_side(c.side);
  json j = c.fam() == Family::ST ? st_bone_json(st_bone(od, s)) : q_bone_json(q_trace_bone(od, s, trace_options(c)));
  out.put("trace.bone.json", j);
}

void cmd_intersections(const RunConfig& c, Writer& out) {
  int n = half_period(c);
  std::vector<OrderData> ods;
  for (int k = 1; k <= n; ++k)
    for (const auto& od : admissible_order_data(k)) ods.push_back(od);
  json pairs = json::array();
  if (c.fam() == Family::ST) {
    for (const auto& a : ods)
      for (const auto& b : ods) {
        json xs = json::array();
        for (const auto& x : st_bone_crossings(st_bone(a, Side::left), st_bone(b, Side::right))) {
          json jx = {{"kind", to_string(x.kind)}, {"exact", x.v.str() + " " + x.w.str()},
                     {"p", point(x.v.to_double(), x.w.to_double())}};
          if (x.joint) jx["joint"] = x.joint->str();
          xs.push_back(jx);
        }
        pairs.push_back({{"left", a.str()}, {"right", b.str()}, {"count", xs.size()}, {"crossings", xs}});
      }
  } else {
    auto opt = trace_options(c);
    std::vector<QBone> L(ods.size()), R(ods.size());
    parallel_for(ods.size(), c.workers, [&](std::size_t i) {
      L[i] = q_trace_bone(ods[i], Side::left, opt);
      R[i] = q_trace_bone(ods[i], Side::right, opt);
    });
    std::vector<json> rows(ods.size() * ods.size());
    parallel_for(rows.size(), c.workers, [&](std::size_t idx) {
      const QBone& a = L[idx / ods.size()];
      const QBone& b = R[idx % ods.size()];
      json xs = json::array();
      for (const auto& x : q_bone_crossings(a, b)) {
        json jx = {{"kind", x.primary ? "primary" : "secondary"}, {"p", point(x.p.v, x.p.w)},
                   {"angle", jnum(transversality_check(a, b, x.p))}};
        if (x.joint) jx["joint"] = x.joint->str();
        xs.push_back(jx);
      }
      rows[idx] = {{"left", a.od.str()}, {"right", b.od.str()}, {"count", xs.size()}, {"crossings", xs}};
    });
    for (auto& r : rows) pairs.push_back(std::move(r));
  }
  out.put("intersections.json", {{"family", c.family}, {"period", c.period}, {"pairs", pairs}});
}

EntropyGrid make_grid(const RunConfig& c) {
  Estimator est;
  if (c.estimator == "lap_growth") est = Estimator::lap_growth;
  else if (c.estimator == "neg_growth") est = Estimator::neg_growth;
  else throw io_error("unknown estimator " + c.estimator);
  return entropy_grid(c.fam(), c.res, c.kmax, c.workers, {}, est);
}

void cmd_entropy_grid(const RunConfig& c, Writer& out) {
  EntropyGrid g = make_grid(c);
  out.text("grid.csv", grid_csv(g));
  out.text("grid.pgm", grid_pgm(g));
}

void cmd_isentrope(const RunConfig& c, Writer& out) {
  EntropyGrid g = make_grid(c);
  Isentrope iso = isentrope_extract(g, c.h0);
  json cells = json::array(), polys = json::array();
  int m = g.res - 1;
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i)
      if (iso.has(i, j)) cells.push_back({i, j, iso.component_of[std::size_t(j) * std::size_t(m) + std::size_t(i)]});
  std::string csv = "contour,v,w\n";
  for (std::size_t k = 0; k < iso.polylines.size(); ++k) {
    json p = json::array();
    for (const auto& q : iso.polylines[k]) {
      p.push_back(point(q.v, q.w));
      csv += std::to_string(k) + "," + num(q.v) + "," + num(q.w) + "\n";
    }
    polys.push_back(p);
  }
  out.put("isentrope.json", {{"family", c.family}, {"h0", jnum(c.h0)}, {"res", g.res}, {"kmax", g.kmax},
                             {"cell_count", iso.cell_count}, {"components", iso.components},
                             {"cells", cells}, {"polylines", polys}});
  out.text("isentrope.csv", csv);
  out.text("grid.pgm", grid_pgm(g));
}

void cmd_skeleton(const RunConfig& c, Writer& out) {
  SkeletonComplex sk = c.fam() == Family::ST ? build_st_skeleton(c.n) : build_q_skeleton(c.n, trace_options(c), c.workers);
  json V = json::array(), E = json::array(), F = json::array(), B = json::array();
  for (const auto& v : sk.cells0) {
    json jv = {{"kind", to_string(v.kind)}, {"label", v.label}, {"p", point(v.p.v, v.p.w)}};
    if (!v.exact.empty()) jv["exact"] = v.exact;
    V.push_back(jv);
  }
  for (const auto& e : sk.cells1) E.push_back({{"a", e.a}, {"b", e.b}, {"bone", e.bone}});
  for (const auto& f : sk.cells2)
    F.push_back({{"edges", f.edges}, {"neighbours", f.neighbours}, {"area", jnum(f.area)}, {"outer", f.outer}});
  for (const auto& b : sk.bones)
    B.push_back({{"side", to_string(b.side)}, {"order_data", b.od.str()}, {"vertices", b.vertices}});
  out.put("skeleton.json", {{"family", c.family}, {"n", sk.n}, {"euler", sk.euler()}, {"bones", B},
                            {"vertices", V}, {"edges", E}, {"faces", F}});
}

void cmd_audit(const RunConfig& c, Writer& out) {
  std::vector<ParamPoint> top, right;
  for (int i = 0; i < c.res; ++i) {
    double t = double(i) / double(c.res - 1);
    top.push_back({t, 1.0, c.fam()});
    right.push_back({1.0, t, c.fam()});
  }
  auto report = [&](const char* name, const std::vector<ParamPoint>& path) {
    auto r = entropy_monotonicity_audit(path, c.kmax, c.workers);
    json h = json::array(), e = json::array();
    for (double x : r.h) h.push_back(jnum(x));
    for (double x : r.err) e.push_back(jnum(x));
    return json{{"path", name}, {"points", r.points}, {"violations", r.violations}, {"max_drop", jnum(r.max_drop)},
                {"where", r.where}, {"ok", r.ok()}, {"h", h}, {"err", e}};
  };
  out.put("audit.json", {{"family", c.family}, {"kmax", c.kmax}, {"paths", {report("top", top), report("right", right)}}});
}

void cmd_classify(const RunConfig& c, Writer& out) {
  if (c.fam() != Family::Q) throw domain_error("classify is defined for the Q family");
  auto hc = classify_hyperbolic({c.v, c.w, Family::Q});
  auto cyc = [](const std::optional<AttractingCycle>& a) -> json {
    if (!a) return nullptr;
    json pts = json::array();
    for (double x : a->points) pts.push_back(jnum(x));
    return {{"start_lane", a->start_lane}, {"multiplier", jnum(a->multiplier)}, {"points", pts}};
  };
  out.put("classify.json", {{"v", jnum(c.v)}, {"w", jnum(c.w)}, {"type", to_string(hc.type)},
                            {"degenerate", hc.degenerate}, {"immediate1", hc.immediate1},
                            {"immediate2", hc.immediate2}, {"cycle1", cyc(hc.cycle1)}, {"cycle2", cyc(hc.cycle2)}});
}

void write_error(const fs::path& dir, const std::string& kind, const std::string& msg) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream f(dir / "errors.json", std::ios::binary);
  if (f) f << json{{"error", kind}, {"message", msg}}.dump(2) << "\n";
  std::cerr << "bones: " << kind << " error: " << msg << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Combinatorics and entropy of alternate compositions of stunted-tent and logistic maps"};
  app.require_subcommand(1, 1);
  RunConfig cfg;

  auto common = [&](CLI::App* s) {
    s->add_option("--family", cfg.family, "st or q")->check(CLI::IsMember({"st", "q"}));
    s->add_option("--out", cfg.out, "output directory");
    s->add_option("--workers", cfg.workers, "worker threads");
    s->add_option("--tol-corr", cfg.tol_corr, "continuation corrector tolerance");
    s->add_option("--tol-sym", cfg.tol_sym);
    s->add_option("--tol-orbit", cfg.tol_orbit);
    s->add_option("--seed", cfg.seed);
  };
  auto grid = [&](CLI::App* s) {
    s->add_option("--res", cfg.res, "grid nodes per side");
    s->add_option("--kmax", cfg.kmax, "largest iterate count");
    s->add_option("--estimator", cfg.estimator, "lap_growth or neg_growth");
  };

  auto* s_od = app.add_subcommand("orderdata", "admissible order-data of period 2n");
  s_od->add_option("--n", cfg.n)->required();
  common(s_od);
  auto* s_bones = app.add_subcommand("bones", "all left and right bones of one period");
  s_bones->add_option("--period", cfg.period)->required();
  common(s_bones);
  auto* s_trace = app.add_subcommand("trace", "one bone, given by --od and --side");
  s_trace->add_option("--od", cfg.od, "order-data, e.g. s=[1,2];t=[2,1]")->required();
  s_trace->add_option("--side", cfg.side);
  common(s_trace);
  auto* s_int = app.add_subcommand("intersections", "crossings of all bone pairs up to a period");
  s_int->add_option("--period", cfg.period)->required();
  common(s_int);
  auto* s_grid = app.add_subcommand("entropy-grid", "entropy on the node lattice");
  grid(s_grid);
  common(s_grid);
  auto* s_iso = app.add_subcommand("isentrope", "bracketing cells and contours of one level");
  s_iso->add_option("--h0", cfg.h0)->required();
  grid(s_iso);
  common(s_iso);
  auto* s_sk = app.add_subcommand("skeleton", "n-skeleton cell complex");
  s_sk->add_option("--n", cfg.n)->required();
  common(s_sk);
  auto* s_aud = app.add_subcommand("audit-monotonicity", "entropy along the top and right edges");
  grid(s_aud);
  common(s_aud);
  auto* s_cls = app.add_subcommand("classify", "hyperbolic type at one Q parameter");
  s_cls->add_option("--v", cfg.v)->required();
  s_cls->add_option("--w", cfg.w)->required();
  common(s_cls);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    write_error(cfg.out, "config", e.what());
    return 2;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    cfg.validate();
    Writer out(cfg.out);
    const std::string& cmd = cfg.command;
    if (cmd == "orderdata") cmd_orderdata(cfg, out);
    else if (cmd == "bones") cmd_bones(cfg, out);
    else if (cmd == "trace") cmd_trace(cfg, out);
    else if (cmd == "intersections") cmd_intersections(cfg, out);
    else if (cmd == "entropy-grid") cmd_entropy_grid(cfg, out);
    else if (cmd == "isentrope") cmd_isentrope(cfg, out);
    else if (cmd == "skeleton") cmd_skeleton(cfg, out);
    else if (cmd == "audit-monotonicity") cmd_audit(cfg, out);
    else cmd_classify(cfg, out);
    json artifacts = out.files();
    json manifest = {{"version", kVersion}, {"config", cfg.echo()}, {"artifacts", artifacts}};
    std::ofstream f(out.dir() / "manifest.json", std::ios::binary);
    f << manifest.dump(2) << "\n";
    if (!f) throw io_error("cannot write manifest.json");
  } catch (const io_error& e) {
    write_error(cfg.out, "io", e.what());
    return 2;
  } catch (const domain_error& e) {
    write_error(cfg.out, "domain", e.what());
    return 1;
  } catch (const budget_error& e) {
    write_error(cfg.out, "domain", e.what());
    return 1;
  } catch (const numeric_error& e) {
    write_error(cfg.out, "domain", e.what());
    return 1;
  }
  return 0;
}
