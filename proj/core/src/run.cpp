#include "bloch/run.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bloch/dynamics.hpp"
#include "bloch/errors.hpp"
#include "bloch/fiber.hpp"
#include "bloch/geometry.hpp"
#include "bloch/magnetic.hpp"
#include "bloch/pump.hpp"
#include "bloch/wavepacket.hpp"

namespace bloch {
namespace {

using json = nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_atomic(const std::string& path, const std::string& text) {
  if (path.empty()) throw io_error("empty output path");
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open '" + tmp + "' for writing");
    out << text;
    out.flush();
    if (!out) throw io_error("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("cannot move '" + tmp + "' to '" + path + "'");
}

// One-line header, 17-significant-digit floats, '\n' rows.
class Csv {
public:
  explicit Csv(const std::vector<std::string>& header) {
    for (size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
  }
  void begin_row() { first_ = true; }
  void cell(double v) { sep(); out_ << fmt(v); }
  void cell(int v) { sep(); out_ << v; }
  void end_row() { out_ << '\n'; }
  std::string str() const { return out_.str(); }

private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostringstream out_;
  bool first_ = true;
};

json base_json(const Config& cfg) {
  json j;
  j["version"] = kVersion;
  j["spec_hash"] = cfg.hash();
  return j;
}

void write_json(const std::string& path, const json& j) {
  if (path.empty()) return;
  write_atomic(path, j.dump(2) + "\n");
}

Lattice lattice_from(const Config& cfg) {
  const ConfigSection* s = cfg.find("lattice");
  if (!s) throw config_error("missing [lattice] section");
  int dim = get_int(*s, "dim");
  if (dim < 1 || dim > 3) throw config_error("[lattice] dim must be 1, 2, or 3");
  std::vector<Eigen::Vector3d> vecs;
  const char* names[3] = {"a1", "a2", "a3"};
  for (int j = 0; j < dim; ++j) {
    std::vector<double> row = get_double_list(*s, names[j]);
    if (static_cast<int>(row.size()) != dim)
      throw config_error(std::string("[lattice] ") + names[j] + " needs " +
                         std::to_string(dim) + " coordinates");
    Eigen::Vector3d v = Eigen::Vector3d::Zero();
    for (int c = 0; c < dim; ++c) v[c] = row[c];
    vecs.push_back(v);
  }
  return make_lattice(dim, vecs);
}

FourierPotential potential_from(const Config& cfg, const Lattice& lat) {
  const ConfigSection* s = cfg.find("potential");
  if (!s) throw config_error("missing [potential] section");
  bool real = get_bool(*s, "real", true);
  std::vector<std::pair<IVec, cplx>> entries;
  for (const ConfigEntry* row : get_rows(*s, "coeff")) {
    std::vector<double> v =
        parse_numbers(row->value, "line " + std::to_string(row->line) + ": coeff");
    if (static_cast<int>(v.size()) != lat.dim + 2)
      throw config_error("line " + std::to_string(row->line) + ": coeff row needs " +
                         std::to_string(lat.dim) + " indices plus Re Im");
    IVec n{0, 0, 0};
    for (int j = 0; j < lat.dim; ++j) {
      n[j] = static_cast<int>(std::lround(v[j]));
      if (v[j] != static_cast<double>(n[j]))
        throw config_error("line " + std::to_string(row->line) +
                           ": coeff indices must be integers");
    }
    entries.push_back({n, cplx(v[lat.dim], v[lat.dim + 1])});
  }
  if (entries.empty()) throw config_error("[potential] has no coeff rows");
  return potential_from_coeffs(lat, entries, real);
}

int threads_from(const Config& cfg) {
  const ConfigSection* s = cfg.find("run");
  if (!s) return 0;
  int t = get_int(*s, "threads", 0);
  get_string(*s, "kind", "");  // consumed by dispatch when present
  if (t < 0) throw config_error("[run] threads must be >= 0");
  return t;
}

IVec sizes_from(const ConfigSection& s, const std::string& key, int dim) {
  std::vector<int> v = get_int_list(s, key);
  if (static_cast<int>(v.size()) != dim)
    throw config_error("[" + s.name + "] " + key + " needs " + std::to_string(dim) +
                       " entries");
  IVec out{1, 1, 1};
  for (int j = 0; j < dim; ++j) {
    if (v[j] < 1) throw config_error("[" + s.name + "] " + key + " must be positive");
    out[j] = v[j];
  }
  return out;
}

double cutoff_from(const ConfigSection& s) {
  double c = get_double(s, "cutoff");
  if (!(c > 0.0)) throw config_error("[" + s.name + "] cutoff must be positive");
  return c;
}

void run_bands(Config& cfg) {
  Lattice lat = lattice_from(cfg);
  FourierPotential V = potential_from(cfg, lat);
  int threads = threads_from(cfg);
  const ConfigSection* s = cfg.find("bands");
  if (!s) throw config_error("missing [bands] section");
  double cutoff = cutoff_from(*s);
  IVec sizes = sizes_from(*s, "grid", lat.dim);
  int count = get_int(*s, "count");
  if (count < 1) throw config_error("[bands] count must be positive");
  bool so = get_bool(*s, "spin_orbit", false);
  std::string out_csv = get_string(*s, "out_csv", "");
  std::string out_json = get_string(*s, "out_json", "");
  cfg.check_consumed();

  PlaneWaveBasis basis = make_basis(lat, cutoff);
  KGrid grid = bz_grid(lat, sizes);
  BandData bd = band_structure(V, grid, basis, count, so, threads);

  if (!out_csv.empty()) {
    std::vector<std::string> header;
    for (int j = 0; j < lat.dim; ++j) header.push_back("k_" + std::to_string(j + 1));
    for (int b = 0; b < count; ++b) header.push_back("E_" + std::to_string(b));
    Csv csv(header);
    for (int m = 0; m < grid.total; ++m) {
      csv.begin_row();
      Vector3d k = grid.point(m);
      for (int j = 0; j < lat.dim; ++j) csv.cell(k[j]);
      for (int b = 0; b < count; ++b) csv.cell(bd.E[m][b]);
      csv.end_row();
    }
    write_atomic(out_csv, csv.str());
  }
  json j = base_json(cfg);
  j["cutoff"] = cutoff;
  j["basis_size"] = basis.size();
  j["grid"] = std::vector<int>(sizes.begin(), sizes.begin() + lat.dim);
  j["bands"] = count;
  j["spin_orbit"] = so;
  write_json(out_json, j);
}

void run_berry(Config& cfg) {
  Lattice lat = lattice_from(cfg);
  if (lat.dim != 2) throw config_error("berry needs a 2-d lattice");
  FourierPotential V = potential_from(cfg, lat);
  int threads = threads_from(cfg);
  const ConfigSection* s = cfg.find("berry");
  if (!s) throw config_error("missing [berry] section");
  double cutoff = cutoff_from(*s);
  IVec sizes = sizes_from(*s, "grid", 2);
  int band = get_int(*s, "band");
  int count = get_int(*s, "count", 1);
  if (band < 0 || count < 1) throw config_error("[berry] band window invalid");
  std::string out_csv = get_string(*s, "out_csv", "");
  std::string out_json = get_string(*s, "out_json", "");
  cfg.check_consumed();

  PlaneWaveBasis basis = make_basis(lat, cutoff);
  KGrid grid = bz_grid(lat, sizes);
  BandData bd = band_structure(V, grid, basis, band + count + 1, false, threads);
  BlochFrame frame = fix_gauge(make_frame(bd, band, count));
  BerryField field = berry_curvature(frame);
  int chern = chern_number(field);
  std::vector<double> zak = zak_phase_lines(frame, 0);

  if (!out_csv.empty()) {
    Csv csv({"k_1", "k_2", "F"});
    for (int m = 0; m < grid.total; ++m) {
      csv.begin_row();
      Vector3d k = grid.point(m);
      csv.cell(k[0]);
      csv.cell(k[1]);
      csv.cell(field.F[m]);
      csv.end_row();
    }
    write_atomic(out_csv, csv.str());
  }
  json j = base_json(cfg);
  j["chern"] = chern;
  j["residual"] = field.residual;
  j["zak_phases"] = zak;
  write_json(out_json, j);
}

void run_butterfly(Config& cfg) {
  Lattice lat = lattice_from(cfg);
  FourierPotential V = potential_from(cfg, lat);
  int threads = threads_from(cfg);
  const ConfigSection* s = cfg.find("butterfly");
  if (!s) throw config_error("missing [butterfly] section");
  int q_max = get_int(*s, "q_max");
  if (q_max < 1) throw config_error("[butterfly] q_max must be positive");
  IVec sizes = sizes_from(*s, "grid", 2);
  bool with_chern = get_bool(*s, "chern", false);
  int chern_grid = get_int(*s, "chern_grid", 16);
  std::string out_csv = get_string(*s, "out_csv", "");
  std::string out_json = get_string(*s, "out_json", "");
  cfg.check_consumed();

  HarperSymbol symbol = potential_symbol(V);
  std::vector<ButterflyRow> rows =
      butterfly_scan(symbol, q_max, sizes[0], sizes[1], threads);

  if (!out_csv.empty()) {
    Csv csv({"p", "q", "alpha", "interval_lo", "interval_hi"});
    for (const auto& row : rows)
      for (const auto& iv : row.intervals) {
        csv.begin_row();
        csv.cell(row.flux.p);
        csv.cell(row.flux.q);
        csv.cell(row.flux.alpha());
        csv.cell(iv.lo);
        csv.cell(iv.hi);
        csv.end_row();
      }
    write_atomic(out_csv, csv.str());
  }
  json j = base_json(cfg);
  j["q_max"] = q_max;
  j["flux_count"] = rows.size();
  size_t intervals = 0;
  for (const auto& row : rows) intervals += row.intervals.size();
  j["interval_count"] = intervals;
  if (with_chern) {
    json cherns = json::array();
    for (const auto& row : rows) {
      HarperModel model{symbol, row.flux};
      json entry;
      entry["p"] = row.flux.p;
      entry["q"] = row.flux.q;
      std::vector<int> c;
      for (int b = 0; b < row.flux.q; ++b)
        c.push_back(magnetic_band_chern(model, b, chern_grid));
      entry["cherns"] = c;
      cherns.push_back(entry);
    }
    j["cherns"] = cherns;
  }
  write_json(out_json, j);
}

ScalarField field_rows(const ConfigSection& s, const std::string& key, int dim) {
  ScalarField field;
  for (const ConfigEntry* row : get_rows(s, key)) {
    std::string ctx = "line " + std::to_string(row->line) + ": " + key;
    std::istringstream in(row->value);
    std::string kind;
    in >> kind;
    std::string rest;
    std::getline(in, rest);
    std::vector<double> v = parse_numbers(rest, ctx);
    FieldTerm term;
    if (kind == "poly") {
      if (v.size() != 4) throw config_error(ctx + ": poly rows are COEFF ex ey ez");
      term.kind = FieldTerm::Kind::poly;
      term.coeff = v[0];
      for (int j = 0; j < 3; ++j) {
        term.expo[j] = static_cast<int>(std::lround(v[1 + j]));
        if (v[1 + j] != static_cast<double>(term.expo[j]) || term.expo[j] < 0)
          throw config_error(ctx + ": exponents must be nonnegative integers");
      }
    } else if (kind == "trig") {
      if (v.size() != 5) throw config_error(ctx + ": trig rows are COEFF wx wy wz PHASE");
      term.kind = FieldTerm::Kind::trig;
      term.coeff = v[0];
      for (int j = 0; j < 3; ++j) term.wave[j] = v[1 + j];
      term.phase = v[4];
    } else {
      throw config_error(ctx + ": term kind must be poly or trig");
    }
    for (int j = dim; j < 3; ++j)
      if (term.expo[j] != 0 || term.wave[j] != 0.0)
        throw config_error(ctx + ": term depends on coordinates beyond the dimension");
    field.terms.push_back(term);
  }
  return field;
}

void run_dynamics(Config& cfg) {
  Lattice lat = lattice_from(cfg);
  FourierPotential V = potential_from(cfg, lat);
  int threads = threads_from(cfg);
  const ConfigSection* s = cfg.find("dynamics");
  if (!s) throw config_error("missing [dynamics] section");
  double cutoff = cutoff_from(*s);
  int band = get_int(*s, "band", 0);
  IVec cells = sizes_from(*s, "cells", lat.dim);
  IVec samples = sizes_from(*s, "samples", lat.dim);
  std::vector<double> eps_list = get_double_list(*s, "eps");
  if (eps_list.empty()) throw config_error("[dynamics] eps list is empty");
  for (double e : eps_list)
    if (!(e > 0.0)) throw config_error("[dynamics] eps must be positive");
  double horizon = get_double(*s, "horizon");  // slow time
  double dt_out = get_double(*s, "dt_out");
  double dt_split = get_double(*s, "dt_split");
  if (!(horizon > 0.0) || !(dt_out > 0.0) || !(dt_split > 0.0))
    throw config_error("[dynamics] horizon, dt_out, dt_split must be positive");
  double sigma_scale = get_double(*s, "sigma_scale");
  std::vector<double> k0f = get_double_list(*s, "k0");
  if (static_cast<int>(k0f.size()) != lat.dim)
    throw config_error("[dynamics] k0 needs one dual coordinate per dimension");
  std::string out_csv = get_string(*s, "out_csv", "");
  std::string out_json = get_string(*s, "out_json", "");

  const ConfigSection* fs = cfg.find("fields");
  ScalarField phi;
  std::array<ScalarField, 3> A;
  if (fs) {
    phi = field_rows(*fs, "phi", lat.dim);
    const char* an[3] = {"a1", "a2", "a3"};
    for (int j = 0; j < 3; ++j) A[j] = field_rows(*fs, an[j], lat.dim);
  }
  cfg.check_consumed();

  Vector3d k0 = Vector3d::Zero();
  for (int j = 0; j < lat.dim; ++j) k0 += k0f[j] * lat.dual_vector(j);

  PlaneWaveBasis basis = make_basis(lat, cutoff);
  KGrid grid = bz_grid(lat, cells);
  BandData bd = band_structure(V, grid, basis, band + 2, false, threads);
  BlochFrame frame = fix_gauge(make_frame(bd, band, 1));
  BandGeometry geom = band_geometry(bd, band, true);
  BoxGrid box = make_box(lat, cells, samples);

  std::vector<double> err0_x, err1_x, err0_k, err1_k;
  Observables obs_last;
  Trajectory sc_last;
  int n_out = std::max(1, static_cast<int>(std::lround(horizon / dt_out)));

  for (double eps : eps_list) {
    ExternalFields fields = make_fields(lat.dim, eps, phi, A);
    double sigma = sigma_scale * std::sqrt(eps);
    auto envelope = [&](const Vector3d& k) -> cplx {
      double d = bz_distance(lat, k, k0);
      return std::exp(-0.5 * d * d / (sigma * sigma));
    };
    WavePacket wp = band_wavepacket(frame, 0, box, envelope);

    double t_micro = horizon / eps;
    long stride = std::max(1L, std::lround(dt_out / (eps * dt_split)));
    long nsteps = static_cast<long>(n_out) * stride;
    double dt_micro = t_micro / nsteps;
    Observables obs =
        split_step_propagate(wp, V, fields, t_micro, dt_micro, static_cast<int>(stride));

    double ds = horizon / n_out;
    SemiclassicalState s0;
    s0.r = eps * obs.x.front();
    s0.k = obs.k.front();
    s0.band = band;
    Trajectory sc0 = integrate_semiclassics(geom, fields, s0, 0, horizon, ds);
    Trajectory sc1 = integrate_semiclassics(geom, fields, s0, 1, horizon, ds);
    CenterErrors e0 = compare_centers(obs, sc0);
    CenterErrors e1 = compare_centers(obs, sc1);
    err0_x.push_back(e0.x);
    err1_x.push_back(e1.x);
    err0_k.push_back(e0.k);
    err1_k.push_back(e1.k);
    obs_last = std::move(obs);
    sc_last = std::move(sc1);
  }

  if (!out_csv.empty()) {
    std::vector<std::string> header{"s"};
    for (int j = 0; j < lat.dim; ++j) header.push_back("r_" + std::to_string(j + 1));
    for (int j = 0; j < lat.dim; ++j) header.push_back("k_" + std::to_string(j + 1));
    for (int j = 0; j < lat.dim; ++j) header.push_back("x_" + std::to_string(j + 1));
    for (int j = 0; j < lat.dim; ++j) header.push_back("kmean_" + std::to_string(j + 1));
    header.push_back("norm");
    header.push_back("energy");
    Csv csv(header);
    double eps = eps_list.back();
    for (size_t i = 0; i < obs_last.s.size(); ++i) {
      csv.begin_row();
      csv.cell(obs_last.s[i]);
      size_t j = std::min(i, sc_last.s.size() - 1);
      for (int c = 0; c < lat.dim; ++c) csv.cell(sc_last.r[j][c]);
      for (int c = 0; c < lat.dim; ++c) csv.cell(sc_last.k[j][c]);
      for (int c = 0; c < lat.dim; ++c) csv.cell(eps * obs_last.x[i][c]);
      for (int c = 0; c < lat.dim; ++c) csv.cell(obs_last.k[i][c]);
      csv.cell(obs_last.norm[i]);
      csv.cell(obs_last.energy[i]);
      csv.end_row();
    }
    write_atomic(out_csv, csv.str());
  }

  json j = base_json(cfg);
  j["epsilons"] = eps_list;
  j["errors"] = {{"order0_x", err0_x},
                 {"order1_x", err1_x},
                 {"order0_k", err0_k},
                 {"order1_k", err1_k}};
  json fitted;
  fitted["order0"] = eps_list.size() >= 2 ? fit_order(eps_list, err0_x) : 0.0;
  fitted["order1"] = eps_list.size() >= 2 ? fit_order(eps_list, err1_x) : 0.0;
  j["fitted_order"] = fitted;
  write_json(out_json, j);
}

void run_pump(Config& cfg) {
  Lattice lat = lattice_from(cfg);
  int threads = threads_from(cfg);
  const ConfigSection* s = cfg.find("pump");
  if (!s) throw config_error("missing [pump] section");
  double cutoff = cutoff_from(*s);
  double period = get_double(*s, "period", 1.0);
  int occupied = get_int(*s, "occupied", 1);
  int nk = get_int(*s, "nk");
  int nt = get_int(*s, "nt");
  int halfwidth = get_int(*s, "halfwidth", 0);
  std::string mode = get_string(*s, "mode", "slide");
  std::vector<double> eps_list;
  if (has_key(*s, "eps")) eps_list = get_double_list(*s, "eps");
  double dt = get_double(*s, "dt", 1e-4);
  std::string out_csv = get_string(*s, "out_csv", "");
  std::string out_json = get_string(*s, "out_json", "");

  PumpPath path;
  if (mode == "slide") {
    FourierPotential V = potential_from(cfg, lat);
    int frames = get_int(*s, "frames", nt);
    path = slider_path(V, period, frames, occupied);
  } else if (mode == "keyframes") {
    bool cyclic = get_bool(*s, "cyclic", true);
    std::vector<PumpKeyframe> frames;
    for (const ConfigSection* ks : cfg.find_all("keyframe")) {
      PumpKeyframe f;
      f.t = get_double(*ks, "t");
      bool real = get_bool(*ks, "real", true);
      std::vector<std::pair<IVec, cplx>> entries;
      for (const ConfigEntry* row : get_rows(*ks, "coeff")) {
        std::vector<double> v =
            parse_numbers(row->value, "line " + std::to_string(row->line) + ": coeff");
        if (static_cast<int>(v.size()) != lat.dim + 2)
          throw config_error("line " + std::to_string(row->line) +
                             ": coeff row needs indices plus Re Im");
        IVec n{0, 0, 0};
        for (int j = 0; j < lat.dim; ++j) n[j] = static_cast<int>(std::lround(v[j]));
        entries.push_back({n, cplx(v[lat.dim], v[lat.dim + 1])});
      }
      f.V = potential_from_coeffs(lat, entries, real);
      frames.push_back(std::move(f));
    }
    path = make_pump_path(period, cyclic, occupied, std::move(frames));
  } else {
    throw config_error("[pump] mode must be slide or keyframes");
  }
  cfg.check_consumed();

  KGrid grid = bz_grid(lat, IVec{nk, 1, 1});
  ProjectorField pf = snapshot_projectors(path, grid, nt, cutoff, threads);
  ThetaField tf = theta_field(pf, halfwidth);
  Polarization pol = ksv_polarization(tf);
  bool quantized = path.cyclic && lat.dim == 1;
  int chern = 0;
  if (quantized) chern = pump_chern(pf);

  std::vector<double> dp_eps, convergence;
  PropagatedPump last;
  for (double eps : eps_list) {
    last = propagated_polarization(path, nk, cutoff, eps, dt, threads);
    dp_eps.push_back(last.quanta);
    convergence.push_back(std::abs(last.quanta - pol.quanta[0]));
  }

  if (!out_csv.empty()) {
    if (eps_list.empty())
      throw config_error("[pump] out_csv needs a nonempty eps list for the current trace");
    Csv csv({"t", "J_eps", "J_ksv"});
    double eps_ref = eps_list.back();
    for (int it = 0; it < tf.nt(); ++it) {
      double t = tf.times[it];
      size_t best = 0;
      for (size_t i = 1; i < last.times.size(); ++i)
        if (std::abs(last.times[i] - t) < std::abs(last.times[best] - t)) best = i;
      csv.begin_row();
      csv.cell(t);
      csv.cell(last.current[best]);
      csv.cell(-eps_ref * tf.bz_mean(it)[0]);
      csv.end_row();
    }
    write_atomic(out_csv, csv.str());
  }

  json j = base_json(cfg);
  j["dP_ksv"] = {{"raw", pol.raw[0]}, {"quanta", pol.quanta[0]}};
  if (quantized)
    j["pump_chern"] = chern;
  else
    j["pump_chern"] = nullptr;
  j["epsilons"] = eps_list;
  j["dP_eps"] = dp_eps;
  j["convergence"] = convergence;
  j["gap_floor"] = *std::min_element(pf.gap.begin(), pf.gap.end());
  write_json(out_json, j);
}

}  // namespace

void run_pipeline(const std::string& kind, Config& cfg) {
  std::string k = kind;
  if (k == "run" || k.empty()) {
    const ConfigSection* s = cfg.find("run");
    if (!s) throw config_error("subcommand 'run' needs a [run] section with kind");
    k = get_string(*s, "kind");
  }
  if (k == "bands")
    run_bands(cfg);
  else if (k == "berry")
    run_berry(cfg);
  else if (k == "butterfly")
    run_butterfly(cfg);
  else if (k == "dynamics")
    run_dynamics(cfg);
  else if (k == "pump")
    run_pump(cfg);
  else
    throw config_error("unknown pipeline '" + k + "'");
}

std::string error_json(const std::exception& e) {
  json j;
  if (auto* ne = dynamic_cast<const numerical_error*>(&e)) {
    j["error"] = {{"type", "numerical"}, {"kind", ne->kind()}, {"message", ne->what()}};
    json data = json::parse(ne->where_json(), nullptr, false);
    j["error"]["data"] = data.is_discarded() ? json::object() : data;
  } else if (dynamic_cast<const io_error*>(&e)) {
    j["error"] = {{"type", "io"}, {"message", e.what()}};
  } else if (dynamic_cast<const config_error*>(&e)) {
    j["error"] = {{"type", "config"}, {"message", e.what()}};
  } else {
    j["error"] = {{"type", "internal"}, {"message", e.what()}};
  }
  return j.dump() + "\n";
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const numerical_error*>(&e)) return 3;
  if (dynamic_cast<const io_error*>(&e)) return 4;
  if (dynamic_cast<const config_error*>(&e)) return 2;
  return 1;
}

}  // namespace bloch
