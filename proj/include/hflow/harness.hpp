#pragma once

// Initial-data constructors, experiment configuration and the runner.
//
// Bump families: inside a ball of radius r the structure is rotated by a
// radial profile theta(s) = pi * smoothstep5(1 - s); outside the ball it
// equals the model tensor exactly.  For the 4-torus the nontrivial class
// composes the ball collapse with the suspended Hopf map and the Hopf map,
// all in explicit quaternion arithmetic.

#include <filesystem>
#include <map>
#include <sstream>

#include "hflow/run.hpp"

namespace hflow {

// Degree-7 smoothstep, C^3-flat at both ends.  The flatness order matters:
// a C^2 seam makes the fourth derivative of the field distributional at the
// bump rim and costs the second-derivative diagnostics an order in sup-norm,
// while higher-degree steps inflate the interior derivatives that control
// the pre-asymptotic range.  C^3 with moderate coefficients is the sweet spot.
inline double smooth_transition(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double u4 = u * u * u * u;
  return u4 * (35.0 + u * (-84.0 + u * (70.0 - 20.0 * u)));
}

// Radial rotation profile: pi at the center, 0 at the rim, flat at both.
inline double bump_profile(double s) { return M_PI * smooth_transition(1.0 - s); }

// Displacement to the nearest periodic image of the ball center.
inline void min_image_displacement(const PeriodicGrid& g, const std::array<double, kMaxDim>& x,
                                   const std::array<double, kMaxDim>& center,
                                   std::array<double, kMaxDim>& d) {
  for (int i = 0; i < g.n; ++i) {
    double v = x[std::size_t(i)] - center[std::size_t(i)];
    const double L = g.side[std::size_t(i)];
    v -= L * std::round(v / L);
    d[std::size_t(i)] = v;
  }
}

// ---------------------------------------------------------------------------
// Quaternions; R^4 is identified with H in the basis (1, i, j, k), matching
// the coordinate order (x1, x2, y1, y2) of the standard complex structure:
// right multiplication by j is exactly J0.

struct Quat {
  double w = 0, x = 0, y = 0, z = 0;
  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }
  Quat conj() const { return {w, -x, -y, -z}; }
  double norm2() const { return w * w + x * x + y * y + z * z; }
};

// Hopf map: unit q -> q i conj(q), a unit imaginary quaternion in S^2.
inline std::array<double, 3> hopf(const Quat& q) {
  const Quat r = q * Quat{0, 1, 0, 0} * q.conj();
  return {r.x, r.y, r.z};
}

// Right multiplication by the unit imaginary u = u1 i + u2 j + u3 k
// as a skew-orthogonal complex structure on R^4; u = (0,1,0) gives J0.
inline Endo complex_structure_from_unit(const std::array<double, 3>& u) {
  Endo a(4);
  // R_i, R_j, R_k columns in the (1,i,j,k) basis
  const double ri[4][4] = {{0, -1, 0, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}, {0, 0, -1, 0}};
  const double rj[4][4] = {{0, 0, -1, 0}, {0, 0, 0, -1}, {1, 0, 0, 0}, {0, 1, 0, 0}};
  const double rk[4][4] = {{0, 0, 0, -1}, {0, 0, 1, 0}, {0, -1, 0, 0}, {1, 0, 0, 0}};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      a(i, j) = u[0] * ri[i][j] + u[1] * rj[i][j] + u[2] * rk[i][j];
  return a;
}

enum class BumpClass { Trivial, Eta };

// S^2-valued map of the 4-torus bump: constant (0,1,0) outside the ball.
inline std::array<double, 3> bump_map_u2(const PeriodicGrid& g, const std::array<double, kMaxDim>& x,
                                         const std::array<double, kMaxDim>& center, double r,
                                         BumpClass cls, double amplitude) {
  std::array<double, kMaxDim> d{};
  min_image_displacement(g, x, center, d);
  double dist2 = 0.0;
  for (int i = 0; i < 4; ++i) dist2 += d[std::size_t(i)] * d[std::size_t(i)];
  const double dist = std::sqrt(dist2);
  const double s = dist / r;
  if (s >= 1.0) return {0.0, 1.0, 0.0};
  const double th = bump_profile(s);
  if (cls == BumpClass::Trivial) {
    const double al = amplitude * th;
    return {std::sin(al), std::cos(al), 0.0};
  }
  // ball collapse -> suspended Hopf -> Hopf
  Quat q;
  if (dist == 0.0) {
    q = Quat{std::cos(th), 0, 0, 0};
  } else {
    const Quat dir{d[0] / dist, d[1] / dist, d[2] / dist, d[3] / dist};
    const auto e = hopf(dir);  // eta of the collapse direction
    const double sth = std::sin(th);
    q = Quat{std::cos(th), sth * e[0], sth * e[1], sth * e[2]};
  }
  // second Hopf stage, based at j so the rim lands on J0
  const Quat r3 = q * Quat{0, 0, 1, 0} * q.conj();
  return {r3.x, r3.y, r3.z};
}

inline MultiTensor bump_value_u2(const PeriodicGrid& g, const std::array<double, kMaxDim>& x,
                                 const std::array<double, kMaxDim>& center, double r,
                                 BumpClass cls, double amplitude) {
  const auto u = bump_map_u2(g, x, center, r, cls, amplitude);
  return MultiTensor({endo_as_tensor(complex_structure_from_unit(u))});
}

inline StructureField make_bump_u2(const PeriodicGrid& g, const HModel& mod, double r,
                                   BumpClass cls, double amplitude = 1.0,
                                   int threads = 1) {
  if (mod.kind != HKind::U || mod.n != 4)
    throw std::invalid_argument("make_bump_u2: needs the u2 model on a 4-torus");
  if (!(r > 0.0) || r >= 0.5 * g.min_side())
    throw std::invalid_argument("make_bump_u2: need 0 < r < min(L)/2");
  StructureField f(g, mod);
  std::array<double, kMaxDim> center{};
  for (int i = 0; i < 4; ++i) center[std::size_t(i)] = 0.5 * g.side[std::size_t(i)];
  for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    std::array<double, kMaxDim> x{};
    for (std::size_t pt = lo; pt < hi; ++pt) {
      g.coords(pt, x);
      f.scatter(pt, bump_value_u2(g, x, center, r, cls, amplitude));
    }
  });
  return f;
}

// (f, X) suspension data of the 7-torus bump, and the resulting 3-form.
inline MultiTensor bump_value_g2(const PeriodicGrid& g, const std::array<double, kMaxDim>& x,
                                 const std::array<double, kMaxDim>& center, double r,
                                 const DenseTensor& phi0, const DenseTensor& psi0) {
  std::array<double, kMaxDim> d{};
  min_image_displacement(g, x, center, d);
  double dist2 = 0.0;
  for (int i = 0; i < 7; ++i) dist2 += d[std::size_t(i)] * d[std::size_t(i)];
  const double dist = std::sqrt(dist2);
  const double s = dist / r;
  if (s >= 1.0) return MultiTensor({phi0});
  const double th = bump_profile(s);
  const double f = std::cos(th);
  std::vector<double> xv(7, 0.0);
  if (dist > 0.0) {
    const double sth = std::sin(th);
    for (int i = 0; i < 7; ++i) xv[std::size_t(i)] = sth * d[std::size_t(i)] / dist;
  }
  return MultiTensor({g2_parametrize(f, xv, phi0, psi0)});
}

inline StructureField make_bump_g2(const PeriodicGrid& g, const HModel& mod, double r,
                                   int threads = 1) {
  if (mod.kind != HKind::G2 || g.n != 7)
    throw std::invalid_argument("make_bump_g2: needs the g2 model on a 7-torus");
  if (!(r > 0.0) || r >= 0.5 * g.min_side())
    throw std::invalid_argument("make_bump_g2: need 0 < r < min(L)/2");
  StructureField f(g, mod);
  const DenseTensor phi0 = g2_three_form();
  const DenseTensor psi0 = g2_four_form();
  std::array<double, kMaxDim> center{};
  for (int i = 0; i < 7; ++i) center[std::size_t(i)] = 0.5 * g.side[std::size_t(i)];
  for_each_block(g.npoints, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    std::array<double, kMaxDim> x{};
    for (std::size_t pt = lo; pt < hi; ++pt) {
      g.coords(pt, x);
      f.scatter(pt, bump_value_g2(g, x, center, r, phi0, psi0));
    }
  });
  return f;
}

// ---------------------------------------------------------------------------
// Streamed evaluation of analytically defined fields: derivatives and
// energies without storing the field, for grids too large to hold in memory.

using PointValue = std::function<MultiTensor(const std::array<double, kMaxDim>&)>;

struct StreamedEnergies {
  double E = 0.0, D = 0.0, sup_T = 0.0, sup_grad = 0.0;
};

inline StreamedEnergies streamed_energies(const PeriodicGrid& g, const HModel& mod,
                                          const PointValue& value, int order, int threads) {
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> e_part(nb, 0.0), d_part(nb, 0.0), st_part(nb, 0.0), sg_part(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    std::array<double, kMaxDim> x{}, xs{};
    double esum = 0.0, dsum = 0.0, stmax = 0.0, sgmax = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      g.coords(pt, x);
      const MultiTensor xi = value(x);
      double d2 = 0.0, t2 = 0.0;
      for (int axis = 0; axis < g.n; ++axis) {
        const double h = g.spacing[std::size_t(axis)];
        MultiTensor grad = 0.0 * xi;
        auto sample = [&](int offset) {
          xs = x;
          xs[std::size_t(axis)] += offset * h;
          return value(xs);
        };
        if (order == 2) {
          grad = (0.5 / h) * (sample(+1) - sample(-1));
        } else {
          grad = (8.0 / (12 * h)) * (sample(+1) - sample(-1)) -
                 (1.0 / (12 * h)) * (sample(+2) - sample(-2));
        }
        d2 += norm2(grad);
        const Endo t = recover_torsion_axis(mod, xi, grad);
        t2 += so_inner(t, t);
      }
      esum += t2;
      dsum += d2;
      stmax = std::max(stmax, t2);
      sgmax = std::max(sgmax, d2);
    }
    e_part[b] = esum;
    d_part[b] = dsum;
    st_part[b] = stmax;
    sg_part[b] = sgmax;
  });
  StreamedEnergies out;
  double es = 0.0, ds = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    es += e_part[b];
    ds += d_part[b];
    out.sup_T = std::max(out.sup_T, st_part[b]);
    out.sup_grad = std::max(out.sup_grad, sg_part[b]);
  }
  out.E = 0.5 * es * g.cell_volume();
  out.D = 0.5 * ds * g.cell_volume();
  out.sup_T = std::sqrt(out.sup_T);
  out.sup_grad = std::sqrt(out.sup_grad);
  return out;
}

// Torsion columns of an analytic field at one point, by stencil sampling.
inline TorsionValue streamed_torsion_at(const PeriodicGrid& g, const HModel& mod,
                                        const PointValue& value,
                                        const std::array<double, kMaxDim>& x, int order) {
  const MultiTensor xi = value(x);
  std::vector<MultiTensor> grads;
  grads.reserve(std::size_t(g.n));
  std::array<double, kMaxDim> xs{};
  for (int axis = 0; axis < g.n; ++axis) {
    const double h = g.spacing[std::size_t(axis)];
    auto sample = [&](int off) {
      xs = x;
      xs[std::size_t(axis)] += off * h;
      return value(xs);
    };
    if (order == 2)
      grads.push_back((0.5 / h) * (sample(+1) - sample(-1)));
    else
      grads.push_back((8.0 / (12 * h)) * (sample(+1) - sample(-1)) -
                      (1.0 / (12 * h)) * (sample(+2) - sample(-2)));
  }
  return torsion_from_gradient(mod, xi, grads, /*with_residual=*/false);
}

struct StreamedStructureResiduals {
  double bianchi_sup = 0.0;
  double lapsplit_sup = 0.0;
};

// Bianchi and Laplacian-split defects of an analytic field, evaluated point
// by point with O(1) memory; the workhorse for grids too large to store.
inline StreamedStructureResiduals streamed_structure_residuals(const PeriodicGrid& g,
                                                               const HModel& mod,
                                                               const PointValue& value,
                                                               int order, int threads) {
  if (order != 2) throw std::invalid_argument("streamed residuals support order 2");
  const std::size_t nb = num_blocks(g.npoints);
  std::vector<double> bi_part(nb, 0.0), lp_part(nb, 0.0);
  for_each_block(g.npoints, threads, [&](std::size_t b, std::size_t lo, std::size_t hi) {
    std::array<double, kMaxDim> x{}, xs{};
    double bworst = 0.0, lworst = 0.0;
    for (std::size_t pt = lo; pt < hi; ++pt) {
      g.coords(pt, x);
      const MultiTensor xi = value(x);
      const TorsionValue t0 = streamed_torsion_at(g, mod, value, x, order);
      // neighbor torsion values: one evaluation per signed axis offset
      std::vector<TorsionValue> tp(std::size_t(g.n)), tm(std::size_t(g.n));
      for (int a = 0; a < g.n; ++a) {
        const double h = g.spacing[std::size_t(a)];
        xs = x;
        xs[std::size_t(a)] += h;
        tp[std::size_t(a)] = streamed_torsion_at(g, mod, value, xs, order);
        xs[std::size_t(a)] -= 2 * h;
        tm[std::size_t(a)] = streamed_torsion_at(g, mod, value, xs, order);
      }
      // Bianchi defect over the axis pairs
      for (int a = 0; a < g.n; ++a)
        for (int l = a + 1; l < g.n; ++l) {
          const double ha = g.spacing[std::size_t(a)], hl = g.spacing[std::size_t(l)];
          const Endo datl =
              (0.5 / ha) * (tp[std::size_t(a)].col[std::size_t(l)] - tm[std::size_t(a)].col[std::size_t(l)]);
          const Endo dlta =
              (0.5 / hl) * (tp[std::size_t(l)].col[std::size_t(a)] - tm[std::size_t(l)].col[std::size_t(a)]);
          const Endo br = bracket(t0.col[std::size_t(a)], t0.col[std::size_t(l)]);
          const Endo defect = datl - dlta + 2.0 * br - pi_m(mod, xi, br);
          bworst = std::max(bworst, nrm(defect));
        }
      // Laplacian split defect
      Endo divt(g.n);
      for (int a = 0; a < g.n; ++a) {
        const double h = g.spacing[std::size_t(a)];
        divt += (0.5 / h) * (tp[std::size_t(a)].col[std::size_t(a)] - tm[std::size_t(a)].col[std::size_t(a)]);
      }
      divt = pi_m(mod, xi, divt);
      // wide Laplacian (centered first derivative applied twice), matching
      // the stored-field diagnostic
      MultiTensor lap = 0.0 * xi;
      for (int a = 0; a < g.n; ++a) {
        const double h = g.spacing[std::size_t(a)];
        xs = x;
        xs[std::size_t(a)] += 2 * h;
        MultiTensor acc = value(xs) - xi;
        xs[std::size_t(a)] -= 4 * h;
        acc += value(xs) - xi;
        lap += (1.0 / (4.0 * h * h)) * acc;
      }
      MultiTensor rem = lap - diamond(divt, xi);
      for (int k = 0; k < g.n; ++k)
        rem -= diamond(t0.col[std::size_t(k)], diamond(t0.col[std::size_t(k)], xi));
      lworst = std::max(lworst, nrm(rem));
    }
    bi_part[b] = bworst;
    lp_part[b] = lworst;
  });
  StreamedStructureResiduals out;
  for (std::size_t b = 0; b < nb; ++b) {
    out.bianchi_sup = std::max(out.bianchi_sup, bi_part[b]);
    out.lapsplit_sup = std::max(out.lapsplit_sup, lp_part[b]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Flat TOML subset: `key = value` lines, # comments, strings, numbers,
// booleans, and one-dimensional numeric arrays.

struct ConfigValue {
  enum class Kind { String, Number, Boolean, Array } kind = Kind::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<double> array;
};

using ConfigMap = std::map<std::string, ConfigValue>;

inline ConfigValue parse_config_value(const std::string& raw_in) {
  std::string raw = raw_in;
  // trim
  const auto a = raw.find_first_not_of(" \t");
  const auto b = raw.find_last_not_of(" \t");
  if (a == std::string::npos) throw std::invalid_argument("config: empty value");
  raw = raw.substr(a, b - a + 1);
  ConfigValue v;
  if (raw.front() == '"') {
    if (raw.size() < 2 || raw.back() != '"')
      throw std::invalid_argument("config: unterminated string " + raw);
    v.kind = ConfigValue::Kind::String;
    v.str = raw.substr(1, raw.size() - 2);
    return v;
  }
  if (raw == "true" || raw == "false") {
    v.kind = ConfigValue::Kind::Boolean;
    v.boolean = (raw == "true");
    return v;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') throw std::invalid_argument("config: unterminated array " + raw);
    v.kind = ConfigValue::Kind::Array;
    std::stringstream ss(raw.substr(1, raw.size() - 2));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.find_first_not_of(" \t") == std::string::npos) continue;
      std::size_t used = 0;
      const double d = std::stod(item, &used);
      v.array.push_back(d);
    }
    return v;
  }
  std::size_t used = 0;
  v.num = std::stod(raw, &used);
  while (used < raw.size() && (raw[used] == ' ' || raw[used] == '\t')) ++used;
  if (used != raw.size()) throw std::invalid_argument("config: cannot parse value " + raw);
  v.kind = ConfigValue::Kind::Number;
  return v;
}

inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    // strip comments outside strings
    bool in_string = false;
    std::string body;
    for (char c : line) {
      if (c == '"') in_string = !in_string;
      if (c == '#' && !in_string) break;
      body.push_back(c);
    }
    const auto first = body.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = body.substr(0, eq);
    const auto ka = key.find_first_not_of(" \t");
    const auto kb = key.find_last_not_of(" \t");
    key = key.substr(ka, kb - ka + 1);
    out[key] = parse_config_value(body.substr(eq + 1));
  }
  return out;
}

inline ConfigMap parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------

struct ExperimentConfig {
  std::string kind = "u2";    // u2,u3,su2..su4,g2,spin7,trivialN
  int grid_n = 16;            // points per axis
  double side = 2.0 * M_PI;   // length per axis
  std::string initial = "bump";  // torsion_free | bump | nontrivial_bump
  double r = 1.5;
  double amplitude = 1.0;
  double dt_sigma = 0.1;
  int stencil_order = 2;
  double t_end = 1.0;
  long max_steps = LONG_MAX;
  double blowup_factor = 100.0;
  double conv_threshold = 1e-6;
  int diag_cadence = 1;
  int checkpoint_cadence = 0;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out_dir = "out";
  bool with_bochner = false;
  bool with_theta = false;
  double theta_t0 = 0.0;
  std::vector<double> theta_x0;
  int theta_images = 1;
  std::string resume;  // checkpoint path

  static HModel model_for(const std::string& kind) {
    if (kind == "u2") return make_model(HKind::U, 2);
    if (kind == "u3") return make_model(HKind::U, 3);
    if (kind == "su2") return make_model(HKind::SU, 2);
    if (kind == "su3") return make_model(HKind::SU, 3);
    if (kind == "su4") return make_model(HKind::SU, 4);
    if (kind == "g2") return make_model(HKind::G2);
    if (kind == "spin7") return make_model(HKind::Spin7);
    if (kind.rfind("trivial", 0) == 0) return make_model(HKind::Trivial, std::stoi(kind.substr(7)));
    throw std::invalid_argument("unknown kind: " + kind);
  }

  void apply(const ConfigMap& map) {
    for (const auto& [key, v] : map) {
      if (key == "kind") kind = v.str;
      else if (key == "grid_n") grid_n = int(v.num);
      else if (key == "side") side = v.num;
      else if (key == "initial") initial = v.str;
      else if (key == "r") r = v.num;
      else if (key == "amplitude") amplitude = v.num;
      else if (key == "dt_sigma") dt_sigma = v.num;
      else if (key == "stencil_order") stencil_order = int(v.num);
      else if (key == "t_end") t_end = v.num;
      else if (key == "max_steps") max_steps = long(v.num);
      else if (key == "blowup_factor") blowup_factor = v.num;
      else if (key == "conv_threshold") conv_threshold = v.num;
      else if (key == "diag_cadence") diag_cadence = int(v.num);
      else if (key == "checkpoint_cadence") checkpoint_cadence = int(v.num);
      else if (key == "seed") seed = std::uint64_t(v.num);
      else if (key == "threads") threads = int(v.num);
      else if (key == "out_dir") out_dir = v.str;
      else if (key == "with_bochner") with_bochner = v.boolean;
      else if (key == "with_theta") with_theta = v.boolean;
      else if (key == "theta_t0") theta_t0 = v.num;
      else if (key == "theta_x0") theta_x0 = v.array;
      else if (key == "theta_images") theta_images = int(v.num);
      else if (key == "resume") resume = v.str;
      else throw std::invalid_argument("unknown config key: " + key);
    }
    if (!(r < 0.5 * side)) throw std::invalid_argument("config: need r < side/2");
    if (!(blowup_factor > 0) || !(conv_threshold > 0) || !(dt_sigma > 0))
      throw std::invalid_argument("config: thresholds must be positive");
  }

  FlowOptions flow_options() const {
    FlowOptions opt;
    opt.stencil_order = stencil_order;
    opt.dt_sigma = dt_sigma;
    opt.t_end = t_end;
    opt.max_steps = max_steps;
    opt.blowup_factor = blowup_factor;
    opt.conv_threshold = conv_threshold;
    opt.diag_cadence = diag_cadence;
    opt.checkpoint_cadence = checkpoint_cadence;
    opt.threads = threads;
    opt.with_bochner = with_bochner;
    opt.with_theta = with_theta;
    opt.theta_t0 = theta_t0;
    opt.theta_images = theta_images;
    for (std::size_t i = 0; i < theta_x0.size() && i < kMaxDim; ++i)
      opt.theta_x0[i] = theta_x0[i];
    return opt;
  }

  StructureField build_initial(const HModel& mod, const PeriodicGrid& g) const {
    if (initial == "torsion_free") return StructureField::constant(g, mod);
    if (initial == "bump") {
      if (mod.kind == HKind::G2) return make_bump_g2(g, mod, r, threads);
      if (mod.kind == HKind::U && mod.n == 4)
        return make_bump_u2(g, mod, r, BumpClass::Trivial, amplitude, threads);
      throw std::invalid_argument("bump initial data implemented for u2 and g2");
    }
    if (initial == "nontrivial_bump") {
      if (mod.kind == HKind::U && mod.n == 4)
        return make_bump_u2(g, mod, r, BumpClass::Eta, amplitude, threads);
      if (mod.kind == HKind::G2) return make_bump_g2(g, mod, r, threads);
      throw std::invalid_argument("nontrivial_bump initial data implemented for u2 and g2");
    }
    throw std::invalid_argument("unknown initial data: " + initial);
  }
};

struct ExperimentReport {
  RunResult run;
  std::string csv_path;
  std::string summary_path;
  double E0 = 0.0, D0 = 0.0, sup_T0 = 0.0;
};

// Parses the step count out of a checkpoint filename (ckpt_NNNNNNNN.hstf).
inline long checkpoint_step_from_name(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const std::string name = (slash == std::string::npos) ? path : path.substr(slash + 1);
  if (name.size() < 14 || name.rfind("ckpt_", 0) != 0)
    throw std::invalid_argument("cannot infer the step from checkpoint name " + name);
  return std::stol(name.substr(5, 8));
}

// Orchestrates one flow run: initial data (or resume), run_flow, CSV +
// checkpoints + JSON summary under config.out_dir.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

}  // namespace hflow

#include "hflow/experiment.hpp"
