#include "epsim/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <json.hpp>

#include "epsim/config_io.hpp"
#include "epsim/errors.hpp"

namespace epsim {

namespace {

using json = nlohmann::ordered_json;

std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string snapshot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fields/state_%04zu.bin", i);
    return buf;
}

RunManifest begin_manifest(const std::string& kind, const SimConfig* cfg) {
    RunManifest m;
    m.kind = kind;
    m.code_version = kCodeVersion;
    m.start_time = utc_now();
    if (cfg) {
        m.config_text = serialize_config(*cfg);
        m.config_hash = hash_hex(config_hash(*cfg));
    }
    return m;
}

void finish(const fs::path& dir, RunManifest& m, const std::string& status, const std::string& error = {}) {
    m.status = status;
    m.error = error;
    m.end_time = utc_now();
    write_manifest(dir, m);
}

std::string tag_list() {
    std::string s;
    for (YMTag t : all_tags()) s += (s.empty() ? "" : ", ") + std::to_string(int(t)) + " = " + tag_name(t);
    return s;
}

}  // namespace

std::string RunManifest::to_json() const {
    json j;
    j["format"] = "epsim-manifest 1";
    j["kind"] = kind;
    j["code_version"] = code_version;
    j["config_hash"] = config_hash;
    j["start_time"] = start_time;
    j["end_time"] = end_time;
    j["status"] = status;
    j["error"] = error;
    j["files"] = files;
    json s = json::object();
    for (const auto& [k, v] : scalars) s[k] = std::isfinite(v) ? json(v) : json(nullptr);
    j["scalars"] = s;
    j["config"] = config_text;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.value("format", "") != "epsim-manifest 1") throw DomainError("not an epsim manifest");
    RunManifest m;
    m.kind = j.value("kind", "");
    m.code_version = j.value("code_version", "");
    m.config_hash = j.value("config_hash", "");
    m.start_time = j.value("start_time", "");
    m.end_time = j.value("end_time", "");
    m.status = j.value("status", "");
    m.error = j.value("error", "");
    m.files = j.value("files", std::vector<std::string>{});
    m.config_text = j.value("config", "");
    for (const auto& [k, v] : j["scalars"].items()) m.scalars[k] = v.is_null() ? std::nan("") : v.get<double>();
    return m;
}

void write_manifest(const fs::path& dir, const RunManifest& m) { write_atomic(dir / "manifest.json", m.to_json()); }

RunManifest read_manifest(const fs::path& dir) { return RunManifest::from_json(read_file(dir / "manifest.json")); }

CsvTable energy_table(const Trajectory& tr) {
    CsvTable t;
    t.comments = {"energy balance per output time; dimensionless units on the unit box"};
    t.add_column("t", "time");
    t.add_column("kinetic", "int 1/2 rho |u|^2");
    t.add_column("poisson", "int 1/2 |grad Phi|^2");
    t.add_column("confinement", "int rho V");
    t.add_column("interaction", "1/2 int rho (W * rho)");
    t.add_column("forcing", "potential of the stationary forcing, -int (rho - r) Psi_r");
    t.add_column("total", "E = kinetic + poisson + confinement + interaction + forcing");
    t.add_column("friction", "accumulated int_0^t gamma int rho |u|^2");
    t.add_column("eps_dissipation", "accumulated int_0^t eps ((u, u))");
    t.add_column("alignment", "accumulated alignment dissipation");
    t.add_column("residual", "E(t) + dissipations - E(0)");
    t.add_column("mass", "int rho");
    t.add_column("min_rho", "smallest node density");
    for (const EnergyReport& e : tr.energy)
        t.rows.push_back({e.t, e.kinetic, e.poisson, e.confinement, e.interaction, e.forcing, e.total, e.friction,
                          e.eps_dissipation, e.alignment, e.residual, e.mass, e.min_rho});
    return t;
}

CsvTable coeffs_table(const Trajectory& tr) {
    CsvTable t;
    t.comments = {"velocity Galerkin coefficients per output time"};
    t.add_column("t", "time");
    if (!tr.outputs.empty()) {
        std::size_t n = tr.outputs.front().c.size() / tr.config.dim;
        for (int comp = 0; comp < tr.config.dim; ++comp)
            for (std::size_t k = 0; k < n; ++k)
                t.add_column("c" + std::to_string(comp) + "_" + std::to_string(k),
                             "coefficient of mode " + std::to_string(k) + " in component " + std::to_string(comp));
    }
    for (const SimState& s : tr.outputs) {
        std::vector<double> r{s.t};
        r.insert(r.end(), s.c.begin(), s.c.end());
        t.rows.push_back(std::move(r));
    }
    return t;
}

CsvTable alignment_table(const Trajectory& tr) {
    CsvTable t;
    t.comments = {"alignment monitor per step"};
    t.add_column("t", "time");
    t.add_column("dissipation", "1/2 double integral of psi(x-y) rho(x) rho(y) |u(y)-u(x)|^2");
    t.add_column("work_mismatch", "|dissipation + int (alignment force) . u|");
    t.add_column("total_force", "largest component of int (alignment force)");
    for (const AlignmentMonitor& a : tr.alignment) t.rows.push_back({a.t, a.dissipation, a.work_mismatch, a.total_force});
    return t;
}

FieldArray field_from_state(const NodeState& n, const Quadrature& quad, const SimConfig& cfg) {
    int d = n.dim;
    FieldArray f;
    f.name = "state";
    f.rows = quad.size();
    for (int j = 0; j < d; ++j) f.columns.push_back("x" + std::to_string(j));
    f.columns.push_back("w");
    f.columns.push_back("rho");
    for (int c = 0; c < d; ++c) f.columns.push_back("u" + std::to_string(c));
    for (int c = 0; c < d; ++c)
        for (int j = 0; j < d; ++j) f.columns.push_back("du" + std::to_string(c) + std::to_string(j));
    for (int j = 0; j < d; ++j) f.columns.push_back("gphi" + std::to_string(j));
    f.cols = f.columns.size();
    f.attrs["t"] = format_number(n.t);
    f.attrs["dim"] = std::to_string(d);
    f.attrs["grid"] = "gauss-legendre panels " + std::to_string(quad.panels) + " order " + std::to_string(quad.order);
    f.attrs["K"] = std::to_string(cfg.K);
    f.attrs["eps"] = format_number(cfg.eps);
    f.data.reserve(f.rows * f.cols);
    for (std::size_t q = 0; q < quad.size(); ++q) {
        for (int j = 0; j < d; ++j) f.data.push_back(quad.node(q)[j]);
        f.data.push_back(quad.weights[q]);
        f.data.push_back(n.rho[q]);
        for (int c = 0; c < d; ++c) f.data.push_back(n.u[q * d + c]);
        for (int c = 0; c < d * d; ++c) f.data.push_back(n.du[q * d * d + c]);
        for (int j = 0; j < d; ++j) f.data.push_back(n.gphi[q * d + j]);
    }
    return f;
}

NodeState state_from_field(const FieldArray& f) {
    NodeState n;
    auto it = f.attrs.find("dim");
    if (it == f.attrs.end()) throw DomainError("field has no dim attribute");
    n.dim = std::stoi(it->second);
    int d = n.dim;
    if (f.cols != std::size_t(2 + 2 * d + d * d + d)) throw DomainError("field column count does not match its dimension");
    n.t = std::stod(f.attrs.at("t"));
    for (std::size_t r = 0; r < f.rows; ++r) {
        std::size_t c = d + 1;
        n.rho.push_back(f.at(r, c++));
        for (int k = 0; k < d; ++k) n.u.push_back(f.at(r, c++));
        for (int k = 0; k < d * d; ++k) n.du.push_back(f.at(r, c++));
        for (int k = 0; k < d; ++k) n.gphi.push_back(f.at(r, c++));
    }
    return n;
}

RunManifest run_simulation(const SimConfig& cfg, const fs::path& dir) {
    fs::create_directories(dir);
    RunManifest m = begin_manifest("run", &cfg);
    write_manifest(dir, m);
    try {
        write_atomic(dir / "config.ini", m.config_text);
        m.files.push_back("config.ini");
        Simulator sim(cfg);
        if (cfg.snapshots) fs::create_directories(dir / "fields");
        std::size_t count = 0;
        Trajectory tr = sim.simulate([&](const SimState& s, const EnergyReport&) {
            if (!cfg.snapshots) return;
            std::string name = snapshot_name(count++);
            write_field(dir / name, field_from_state(node_state(sim, s), sim.quad(), cfg));
            m.files.push_back(name);
        });
        write_csv(dir / "energy.csv", energy_table(tr));
        m.files.push_back("energy.csv");
        if (!tr.outputs.empty()) {
            write_csv(dir / "coeffs.csv", coeffs_table(tr));
            m.files.push_back("coeffs.csv");
        }
        if (cfg.system == SystemKind::EulerAlignment) {
            write_csv(dir / "alignment.csv", alignment_table(tr));
            m.files.push_back("alignment.csv");
        }
        m.scalars["E0"] = tr.energy0;
        m.scalars["M0"] = tr.mass0;
        m.scalars["outputs"] = double(tr.energy.size());
        if (!tr.energy.empty()) {
            double rmax = 0.0, merr = 0.0;
            for (const EnergyReport& e : tr.energy) {
                rmax = std::max(rmax, e.residual);
                merr = std::max(merr, std::abs(e.mass - tr.mass0) / tr.mass0);
            }
            m.scalars["final_time"] = tr.energy.back().t;
            m.scalars["final_residual"] = tr.energy.back().residual;
            m.scalars["max_residual"] = rmax;
            m.scalars["max_rel_mass_error"] = merr;
        }
        finish(dir, m, tr.status == "ok" ? "ok" : "failed", tr.error);
    } catch (const std::exception& ex) {
        finish(dir, m, "failed", ex.what());
    }
    return m;
}

std::string member_dir_name(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "eps_%02zu", i);
    return buf;
}

RunManifest run_sweep(const SimConfig& base, const std::vector<double>& eps_list, const fs::path& dir) {
    fs::create_directories(dir);
    RunManifest m = begin_manifest("sweep", &base);
    write_manifest(dir, m);
    CsvTable idx;
    idx.comments = {"sweep index; member i lives in eps_NN with NN = i"};
    idx.add_column("member", "member index");
    idx.add_column("eps", "regularization coefficient");
    idx.add_column("ok", "1 when the run completed");
    idx.add_column("E0", "initial energy");
    idx.add_column("M0", "initial mass");
    idx.add_column("final_time", "last output time");
    idx.add_column("final_residual", "energy residual at the last output");
    idx.add_column("max_rel_mass_error", "largest |M(t) - M(0)| / M(0)");
    bool all_ok = true;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        SimConfig c = base;
        c.eps = eps_list[i];
        RunManifest r = run_simulation(c, dir / member_dir_name(i));
        all_ok = all_ok && r.ok();
        auto sc = [&](const char* k) { return r.scalars.count(k) ? r.scalars.at(k) : std::nan(""); };
        idx.rows.push_back({double(i), c.eps, r.ok() ? 1.0 : 0.0, sc("E0"), sc("M0"), sc("final_time"),
                            sc("final_residual"), sc("max_rel_mass_error")});
        m.files.push_back(member_dir_name(i) + "/");
    }
    write_csv(dir / "sweep.csv", idx);
    m.files.push_back("sweep.csv");
    m.scalars["members"] = double(eps_list.size());
    finish(dir, m, all_ok ? "ok" : "partial");
    return m;
}

std::size_t RunData::snapshot_at(double t) const {
    if (snapshot_times.empty()) throw DomainError("run '" + dir.string() + "' has no field snapshots");
    if (t < 0) return snapshot_times.size() - 1;
    for (std::size_t i = 0; i < snapshot_times.size(); ++i)
        if (std::abs(snapshot_times[i] - t) <= 1e-9) return i;
    throw DomainError("run '" + dir.string() + "' has no snapshot at t = " + format_number(t));
}

NodeState RunData::load_snapshot(std::size_t i) const { return state_from_field(read_field(snapshot_files.at(i))); }

RunData load_run(const fs::path& dir) {
    RunData r;
    r.dir = dir;
    r.manifest = read_manifest(dir);
    r.config = parse_config(r.manifest.config_text);
    if (fs::exists(dir / "energy.csv")) r.energy = read_csv(dir / "energy.csv");
    for (const std::string& f : r.manifest.files) {
        if (f.rfind("fields/", 0) != 0) continue;
        FieldArray a = read_field(dir / f);
        r.snapshot_times.push_back(std::stod(a.attrs.at("t")));
        r.snapshot_files.push_back(dir / f);
    }
    return r;
}

SweepData load_sweep(const fs::path& dir) {
    SweepData s;
    s.dir = dir;
    CsvTable idx = read_csv(dir / "sweep.csv");
    for (const auto& row : idx.rows) {
        std::size_t i = std::size_t(row[idx.column("member")]);
        if (row[idx.column("ok")] != 1.0) continue;
        s.eps.push_back(row[idx.column("eps")]);
        s.members.push_back(load_run(dir / member_dir_name(i)));
    }
    return s;
}

void require_same_grid(const SimConfig& a, const SimConfig& b) {
    if (a.dim != b.dim || a.panels != b.panels || a.order != b.order)
        throw DomainError("runs do not share a quadrature grid");
}

VerifyOutcome verify_relative_energy(const fs::path& ref, const fs::path& mv, const fs::path& out, double c_fit) {
    fs::create_directories(out);
    RunManifest m = begin_manifest("verify-relative-energy", nullptr);
    write_manifest(out, m);
    VerifyOutcome res;
    try {
        RunData r = load_run(ref), v = load_run(mv);
        m.config_text = r.manifest.config_text;
        m.config_hash = r.manifest.config_hash;
        require_same_grid(r.config, v.config);
        Quadrature quad = make_quadrature(r.config.dim, r.config.panels, r.config.order);
        CsvTable t;
        t.comments = {"relative energy of the run against the reference per shared output time",
                      "reference " + fs::absolute(ref).string(), "run " + fs::absolute(mv).string()};
        t.add_column("t", "time");
        t.add_column("kinetic", "int 1/2 rho |u - U|^2");
        t.add_column("field", "int 1/2 |grad Phi_rho - grad Phi_r|^2");
        t.add_column("total", "kinetic + field");
        t.add_column("convective", "-int rho (u - U) (x) (u - U) : grad U");
        t.add_column("damping", "-gamma int rho |u - U|^2");
        t.add_column("div_field", "-1/2 int |grad Phi_rho - grad Phi_r|^2 div U");
        t.add_column("tensor_field", "int dF (x) dF : grad U");
        t.add_column("tensor_bound", "2 d field max |d_j U_i|");
        t.add_column("i1", "int rho (u - U) . grad W * (r - rho)");
        t.add_column("i1_bound", "bound of |i1|");
        t.add_column("grad_U_sup", "max |d_j U_i|");
        std::vector<double> ts, es;
        double gsup = 0.0;
        bool bounds = true;
        for (std::size_t i = 0; i < v.snapshot_times.size(); ++i) {
            std::size_t j;
            try {
                j = r.snapshot_at(v.snapshot_times[i]);
            } catch (const DomainError&) {
                continue;
            }
            RelativeEnergyReport e = relative_energy(v.load_snapshot(i), r.load_snapshot(j), quad, r.config.kernels);
            t.rows.push_back({e.t, e.kinetic, e.field, e.total, e.convective, e.damping, e.div_field, e.tensor_field,
                              e.tensor_bound, e.i1, e.i1_bound, e.grad_U_sup});
            ts.push_back(e.t);
            es.push_back(e.total);
            gsup = std::max(gsup, e.grad_U_sup);
            double tol = 1e-12 * std::max(1.0, e.total);
            bounds = bounds && std::abs(e.tensor_field) <= e.tensor_bound + tol && std::abs(e.i1) <= e.i1_bound + tol;
        }
        if (ts.empty()) throw DomainError("runs share no output time");
        write_csv(out / "rel_energy.csv", t);
        m.files.push_back("rel_energy.csv");
        GronwallResult g = gronwall_check(ts, es, gsup, c_fit);
        m.scalars["gronwall_slope"] = g.slope;
        m.scalars["gronwall_bound"] = g.bound;
        m.scalars["identically_zero"] = g.identically_zero ? 1.0 : 0.0;
        m.scalars["grad_U_sup"] = gsup;
        m.scalars["final_rel_energy"] = es.back();
        m.scalars["bounds_hold"] = bounds ? 1.0 : 0.0;
        res.pass = g.pass && bounds;
        char buf[160];
        if (g.identically_zero)
            std::snprintf(buf, sizeof buf, "relative energy identically zero (max %.3e)", *std::max_element(es.begin(), es.end()));
        else
            std::snprintf(buf, sizeof buf, "gronwall slope %.6g, bound %.6g, final relative energy %.6e", g.slope,
                          g.bound, es.back());
        res.summary = buf;
        if (!bounds) res.summary += "; tensor or I1 bound violated";
        finish(out, m, "ok");
    } catch (const std::exception& ex) {
        finish(out, m, "failed", ex.what());
        res.pass = false;
        res.summary = ex.what();
    }
    return res;
}

VerifyOutcome verify_identifications(const fs::path& sweep, const fs::path& out, double t, const fs::path& ref) {
    fs::create_directories(out);
    RunManifest m = begin_manifest("verify-identifications", nullptr);
    write_manifest(out, m);
    VerifyOutcome res;
    try {
        SweepData s = load_sweep(sweep);
        RunData reference;
        bool have_ref = false;
        if (!ref.empty()) {
            reference = load_run(ref);
            have_ref = true;
        }
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < s.members.size(); ++i) {
            if (s.eps[i] == 0.0) {
                if (!have_ref) {
                    reference = s.members[i];
                    have_ref = true;
                }
                continue;
            }
            order.push_back({s.eps[i], i});
        }
        if (!have_ref) throw DomainError("sweep has no eps = 0 member and no reference run was given");
        if (order.empty()) throw DomainError("sweep has no eps > 0 member");
        std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
        m.config_text = reference.manifest.config_text;
        m.config_hash = reference.manifest.config_hash;
        Quadrature quad = make_quadrature(reference.config.dim, reference.config.panels, reference.config.order);
        NodeState r = reference.load_snapshot(reference.snapshot_at(t));
        CsvTable tab;
        tab.comments = {"identification residuals against the reference at t = " + format_number(r.t),
                        "rows in decreasing eps"};
        tab.add_column("eps", "regularization coefficient");
        tab.add_column("rel_energy", "relative energy against the reference");
        tab.add_column("rho", "|rho - r|_L1");
        tab.add_column("momentum", "|rho u - r U|_L1");
        tab.add_column("flux", "|rho u (x) u - r U (x) U|_L1, entrywise");
        tab.add_column("kinetic", "|rho |u|^2 - r |U|^2|_L1");
        tab.add_column("field", "|grad Phi - grad Phi_r|_L2");
        for (const auto& [eps, i] : order) {
            require_same_grid(reference.config, s.members[i].config);
            NodeState v = s.members[i].load_snapshot(s.members[i].snapshot_at(r.t));
            IdentificationResiduals id = identification_residuals(v, r, quad);
            RelativeEnergyReport e = relative_energy(v, r, quad, reference.config.kernels);
            std::vector<double> row{eps, e.total};
            for (double x : id.values()) row.push_back(x);
            tab.rows.push_back(std::move(row));
        }
        write_csv(out / "identifications.csv", tab);
        m.files.push_back("identifications.csv");
        res.pass = true;
        std::string failed;
        for (std::size_t c = 1; c < tab.columns.size(); ++c) {
            bool dec = strictly_decreasing(tab.series(tab.columns[c]));
            m.scalars["decreasing_" + tab.columns[c]] = dec ? 1.0 : 0.0;
            if (!dec) failed += (failed.empty() ? "" : ", ") + tab.columns[c];
            res.pass = res.pass && dec;
        }
        m.scalars["time"] = r.t;
        res.summary = res.pass ? "all residuals strictly decrease in eps" : "not strictly decreasing: " + failed;
        finish(out, m, "ok");
    } catch (const std::exception& ex) {
        finish(out, m, "failed", ex.what());
        res.pass = false;
        res.summary = ex.what();
    }
    return res;
}

YMFamily load_family(const SweepData& sweep, double t) {
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < sweep.members.size(); ++i)
        if (sweep.eps[i] > 0.0) order.push_back({sweep.eps[i], i});
    std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    YMFamily f;
    for (const auto& [eps, i] : order) {
        const RunData& r = sweep.members[i];
        Quadrature quad = make_quadrature(r.config.dim, r.config.panels, r.config.order);
        f.eps.push_back(eps);
        f.members.push_back(snapshot_from_nodes(r.load_snapshot(r.snapshot_at(t)), quad));
    }
    if (f.members.empty()) throw DomainError("sweep has no eps > 0 member");
    return f;
}

namespace {

template <class Body>
VerifyOutcome ym_command(const char* kind, const fs::path& sweep, const fs::path& out, double t, const Body& body) {
    fs::create_directories(out);
    RunManifest m = begin_manifest(kind, nullptr);
    write_manifest(out, m);
    VerifyOutcome res;
    try {
        SweepData s = load_sweep(sweep);
        YMFamily f = load_family(s, t);
        m.config_text = s.members.front().manifest.config_text;
        m.config_hash = s.members.front().manifest.config_hash;
        m.scalars["time"] = f.finest().t;
        m.scalars["finest_eps"] = f.eps.back();
        res = body(f, m);
        finish(out, m, "ok");
    } catch (const std::exception& ex) {
        finish(out, m, "failed", ex.what());
        res.pass = false;
        res.summary = ex.what();
    }
    return res;
}

YMOptions resolve(const YMOptions& opt, const YMFamily& f) {
    YMOptions o = opt;
    if (o.radius <= 0) o.radius = f.default_radius();
    return o;
}

}  // namespace

VerifyOutcome ym_build(const fs::path& sweep, const fs::path& out, double t, const YMOptions& opt) {
    return ym_command("ym-build", sweep, out, t, [&](const YMFamily& f, RunManifest& m) {
        YMOptions o = resolve(opt, f);
        EmpiricalYoungMeasure nu = build_empirical_measure(f.finest(), o.cells, o.bins, o.radius);
        int sd = nu.state_dim(), dim = nu.dim;
        auto coord = [&](int k) {
            if (k == 0) return std::string("s");
            if (k <= dim) return "v" + std::to_string(k - 1);
            return "F" + std::to_string(k - 1 - dim);
        };
        CsvTable cells;
        cells.comments = {"spatial cells of the empirical Young measure of the finest member"};
        cells.add_column("cell", "cell index, axis 0 fastest");
        for (int j = 0; j < dim; ++j) cells.add_column("center" + std::to_string(j), "cell center coordinate");
        cells.add_column("volume", "cell volume");
        cells.add_column("samples", "quadrature samples in the cell");
        cells.add_column("finite_weight", "weight in finite bins");
        cells.add_column("overflow", "weight with |z|_inf > R");
        CsvTable hist;
        hist.comments = {"nonempty bins; weights normalized by the cell volume",
                         "radius " + format_number(o.radius) + ", bins " + std::to_string(o.bins) + " per coordinate"};
        hist.add_column("cell", "cell index");
        for (int k = 0; k < sd; ++k) hist.add_column(coord(k) + "_lo", "lower bin edge");
        for (int k = 0; k < sd; ++k) hist.add_column(coord(k) + "_hi", "upper bin edge");
        hist.add_column("weight", "bin weight");
        for (int k = 0; k < sd; ++k) hist.add_column(coord(k) + "_mean", "weighted bin centroid");
        std::vector<int> idx(sd);
        for (std::size_t c = 0; c < nu.cell_count(); ++c) {
            const YMCell& cell = nu.cell[c];
            std::vector<double> row{double(c)};
            for (int j = 0; j < dim; ++j) row.push_back(nu.center_of(c, j));
            row.insert(row.end(), {cell.volume, double(cell.samples), cell.finite_weight(), cell.overflow});
            cells.rows.push_back(std::move(row));
            for (const auto& [key, b] : cell.bins) {
                nu.bin_index(key, idx.data());
                std::vector<double> h{double(c)};
                for (int k = 0; k < sd; ++k) h.push_back(nu.bin_lo(k, idx[k]));
                for (int k = 0; k < sd; ++k) h.push_back(nu.bin_hi(k, idx[k]));
                h.push_back(b.weight);
                for (int k = 0; k < sd; ++k) h.push_back(b.sum[k] / b.weight);
                hist.rows.push_back(std::move(h));
            }
        }
        write_csv(out / "ym_cells.csv", cells);
        write_csv(out / "ym_histogram.csv", hist);
        m.files = {"ym_cells.csv", "ym_histogram.csv"};
        m.scalars["radius"] = o.radius;
        return VerifyOutcome{true, std::to_string(hist.rows.size()) + " nonempty bins in " +
                                       std::to_string(nu.cell_count()) + " cells"};
    });
}

VerifyOutcome ym_defect(const fs::path& sweep, const fs::path& out, double t, const YMOptions& opt) {
    return ym_command("ym-defect", sweep, out, t, [&](const YMFamily& f, RunManifest& m) {
        YMOptions o = resolve(opt, f);
        auto defects = all_defects(f, o);
        CsvTable tab;
        tab.comments = {"concentration defects of the finest member per cell", "tags: " + tag_list()};
        tab.add_column("tag", "function tag index");
        tab.add_column("cell", "cell index");
        tab.add_column("comp", "component index");
        tab.add_column("value", "cell average of f minus the top-level truncated moment");
        tab.add_column("mass", "value times cell volume");
        TruncationLadder ladder;
        for (std::size_t l = 0; l < ladder.levels.size(); ++l)
            tab.add_column("level_" + std::to_string(ladder.levels[l]), "defect against ladder level k");
        bool nonneg = true;
        for (const auto& [tag, d] : defects) {
            for (std::size_t c = 0; c < d.cells; ++c)
                for (int k = 0; k < d.comps; ++k) {
                    std::vector<double> row{double(int(tag)), double(c), double(k), d.at(c, k), d.mass_at(c, k)};
                    for (std::size_t l = 0; l < d.levels; ++l) row.push_back(d.by_level[(c * d.levels + l) * d.comps + k]);
                    tab.rows.push_back(std::move(row));
                    if (tag_nonnegative(tag) && d.at(c, k) < -0.02 * std::max(1.0, std::abs(d.at(c, k)))) nonneg = false;
                }
        }
        write_csv(out / "ym_defects.csv", tab);
        m.files = {"ym_defects.csv"};
        m.scalars["radius"] = o.radius;
        m.scalars["nonnegative_tags_ok"] = nonneg ? 1.0 : 0.0;
        return VerifyOutcome{nonneg, nonneg ? "defects of nonnegative tags within tolerance"
                                            : "a nonnegative tag has a negative defect"};
    });
}

VerifyOutcome ym_check(const fs::path& sweep, const fs::path& out, double t, std::uint64_t seed, const YMOptions& opt) {
    return ym_command("ym-check", sweep, out, t, [&](const YMFamily& f, RunManifest& m) {
        YMOptions o = resolve(opt, f);
        DominationReport r = domination_check(all_defects(f, o), 0.02);
        const std::vector<std::string> rel = {"|m_svv|_1 <= d m_sv2", "|m_FF|_1 <= d m_F2", "|m_svabs| <= m_s + m_sv2"};
        CsvTable tab;
        tab.comments = {"domination relations per cell with additive tolerance 0.02",
                        "relations: 0 = " + rel[0] + ", 1 = " + rel[1] + ", 2 = " + rel[2]};
        tab.add_column("relation", "relation index");
        tab.add_column("cell", "cell index");
        tab.add_column("lhs", "left side");
        tab.add_column("rhs", "right side");
        tab.add_column("pass", "1 when lhs <= rhs + tolerance");
        for (const DominationEntry& e : r.entries) {
            double ri = double(std::find(rel.begin(), rel.end(), e.relation) - rel.begin());
            tab.rows.push_back({ri, double(e.cell), e.lhs, e.rhs, e.pass ? 1.0 : 0.0});
        }
        write_csv(out / "ym_check.csv", tab);
        InequalityStats st = inequality_suite(10000, f.finest().dim, seed);
        double gap = trace_bound_gap_ones(f.finest().dim);
        m.files = {"ym_check.csv"};
        m.scalars["domination_pass"] = r.all_pass ? 1.0 : 0.0;
        m.scalars["domination_min_margin"] = r.min_margin;
        m.scalars["inequality_samples"] = double(st.samples);
        m.scalars["inequality_pass"] = st.all_pass() ? 1.0 : 0.0;
        m.scalars["worst_pair_ratio"] = st.worst_pair_ratio;
        m.scalars["worst_trace_ratio"] = st.worst_trace_ratio;
        m.scalars["trace_gap_ones"] = gap;
        bool pass = r.all_pass && st.all_pass() && std::abs(gap) <= 1e-12;
        return VerifyOutcome{pass, std::string("domination ") + (r.all_pass ? "pass" : "FAIL") + ", inequality suite " +
                                       (st.all_pass() ? "pass" : "FAIL")};
    });
}

namespace {

ProfileTerm term(ProfileTerm::Kind k, double a, int mode = 1) {
    ProfileTerm t;
    t.kind = k;
    t.amp = a;
    t.k = mode;
    return t;
}

SimConfig quiet_config() {
    SimConfig c;
    c.poisson = false;
    c.kernels.v.kind = Confinement::Kind::None;
    c.kernels.w.kind = Kernel::Kind::None;
    c.kernels.psi.kind = Kernel::Kind::None;
    c.rho0 = Profile{{term(ProfileTerm::Kind::Const, 1.0)}};
    c.u0 = Profile{};
    c.K = 8;
    SimConfig::default_resolution(c.dim, c.K, c.panels, c.order);
    return c;
}

}  // namespace

bool selftest(std::vector<std::string>& log) {
    bool all = true;
    auto check = [&](const std::string& name, auto&& fn) {
        bool ok = false;
        std::string detail;
        try {
            ok = fn(detail);
        } catch (const std::exception& ex) {
            detail = std::string("exception: ") + ex.what();
        }
        all = all && ok;
        log.push_back((ok ? "PASS " : "FAIL ") + name + (detail.empty() ? "" : " (" + detail + ")"));
    };
    char buf[128];

    check("rest state stays at rest", [&](std::string& d) {
        SimConfig c = quiet_config();
        c.T = 0.2;
        Trajectory tr = Simulator(c).simulate();
        double worst = 0.0;
        for (const auto& e : tr.energy) worst = std::max(worst, std::abs(e.total) + std::abs(e.residual));
        std::snprintf(buf, sizeof buf, "max |E| + |residual| = %.3e", worst);
        d = buf;
        return tr.status == "ok" && worst <= 1e-14;
    });
    check("poisson energy of 1 + cos(2 pi x)", [&](std::string& d) {
        SimConfig c = quiet_config();
        c.poisson = true;
        c.rho0 = Profile{{term(ProfileTerm::Kind::Const, 1.0), term(ProfileTerm::Kind::Cos, 1.0, 2)}};
        Simulator sim(c);
        EnergyReport e = total_energy(sim, sim.initial_state(), 0.0);
        double exact = 1.0 / (16 * kPi * kPi);
        std::snprintf(buf, sizeof buf, "error %.3e", std::abs(e.poisson - exact));
        d = buf;
        return std::abs(e.poisson - exact) <= 1e-12;
    });
    check("pure damping closed form", [&](std::string& d) {
        SimConfig c = quiet_config();
        c.advection = false;
        c.T = 0.5;
        c.u0 = Profile{{term(ProfileTerm::Kind::Sin, 0.1, 1)}};
        Trajectory tr = Simulator(c).simulate();
        double exact = tr.outputs.front().c[0] * std::exp(-0.5);
        double err = std::abs(tr.outputs.back().c[0] - exact) / std::abs(exact);
        std::snprintf(buf, sizeof buf, "relative error %.3e", err);
        d = buf;
        return tr.status == "ok" && err <= 1e-6;
    });
    check("smooth run conserves mass and energy", [&](std::string& d) {
        SimConfig c;
        c.K = 8;
        SimConfig::default_resolution(c.dim, c.K, c.panels, c.order);
        c.kernels.v.center = 0.5;
        c.kernels.w.kind = Kernel::Kind::Gaussian;
        c.kernels.w.param = 0.25;
        c.forcing = ForcingKind::Stationary;
        c.T = 0.2;
        c.output_every = 0.05;
        Trajectory tr = Simulator(c).simulate();
        double merr = 0.0, res = 0.0;
        for (const auto& e : tr.energy) {
            merr = std::max(merr, std::abs(e.mass - tr.mass0) / tr.mass0);
            res = std::max(res, e.residual);
        }
        std::snprintf(buf, sizeof buf, "mass error %.3e, residual %.3e", merr, res);
        d = buf;
        return tr.status == "ok" && merr <= 1e-8 && res <= 1e-6 * std::max(tr.energy0, 1.0);
    });
    check("two-point oscillation measure", [&](std::string& d) {
        EmpiricalYoungMeasure nu = build_empirical_measure(oscillation_snapshot(1e-4, 1 << 12), 4, 32, 10.0);
        double worst = 0.0;
        for (const YMCell& c : nu.cell)
            for (const auto& [k, b] : c.bins) worst = std::max(worst, std::abs(b.weight - 0.5));
        std::snprintf(buf, sizeof buf, "largest deviation from 1/2: %.3e", worst);
        d = buf;
        return worst <= 0.02;
    });
    check("pairwise and trace inequalities", [&](std::string& d) {
        bool ok = true;
        for (int dim : {1, 2}) ok = ok && inequality_suite(1000, dim, 7).all_pass();
        ok = ok && trace_bound_gap_ones(2) == 0.0;
        d = "1000 samples in d = 1, 2";
        return ok;
    });
    check("csv and field round trip", [&](std::string&) {
        CsvTable t;
        t.add_column("a", "first");
        t.rows = {{0.1}, {1.0 / 3}};
        CsvTable back = parse_csv(format_csv(t));
        FieldArray f;
        f.name = "x";
        f.rows = 1;
        f.cols = 2;
        f.columns = {"p", "q"};
        f.data = {kPi, -0.0};
        FieldArray g = decode_field(encode_field(f));
        return back.rows == t.rows && g.data[0] == kPi && std::signbit(g.data[1]);
    });
    return all;
}

}  // namespace epsim
