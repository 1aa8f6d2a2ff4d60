#include "epsim/config_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "epsim/errors.hpp"

namespace epsim {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& s, int line, const std::string& what) {
    std::string t = trim(s);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("invalid number '" + t + "' for " + what, line);
    return v;
}

long to_long(const std::string& s, int line, const std::string& what) {
    std::string t = trim(s);
    long v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || p != t.data() + t.size() || t.empty())
        throw ConfigError("invalid integer '" + t + "' for " + what, line);
    return v;
}

bool to_bool(const std::string& s, int line, const std::string& what) {
    std::string t = trim(s);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ConfigError("invalid boolean '" + t + "' for " + what + " (true or false)", line);
}

// name(arg, ...) or a bare name.
struct Call {
    std::string name;
    std::vector<std::string> args;
};

Call parse_call(const std::string& text, int line) {
    std::string t = trim(text);
    Call c;
    std::size_t open = t.find('(');
    if (open == std::string::npos) {
        c.name = t;
        return c;
    }
    if (t.back() != ')') throw ConfigError("unbalanced parentheses in '" + t + "'", line);
    c.name = trim(t.substr(0, open));
    std::string inner = t.substr(open + 1, t.size() - open - 2);
    std::stringstream ss(inner);
    std::string a;
    while (std::getline(ss, a, ',')) c.args.push_back(trim(a));
    return c;
}

void expect_args(const Call& c, std::size_t n, int line, const std::string& form) {
    if (c.args.size() != n) throw ConfigError("invalid preset '" + c.name + "': expected " + form, line);
}

std::string integrator_name(IntegratorKind k) {
    switch (k) {
        case IntegratorKind::Auto: return "auto";
        case IntegratorKind::RK4: return "rk4";
        case IntegratorKind::IMEX: return "imex";
    }
    return "auto";
}

}  // namespace

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

Profile parse_profile(const std::string& text, int line) {
    std::string t = trim(text);
    Profile prof;
    if (t == "zero") return prof;
    std::size_t depth = 0, start = 0;
    std::vector<std::string> parts;
    for (std::size_t i = 0; i <= t.size(); ++i) {
        if (i < t.size() && t[i] == '(') ++depth;
        if (i < t.size() && t[i] == ')') --depth;
        if (i == t.size() || (t[i] == '+' && depth == 0)) {
            parts.push_back(t.substr(start, i - start));
            start = i + 1;
        }
    }
    for (const auto& part : parts) {
        Call c = parse_call(part, line);
        ProfileTerm term;
        if (c.name == "const") {
            expect_args(c, 1, line, "const(m)");
            term.kind = ProfileTerm::Kind::Const;
        } else if (c.name == "cos" || c.name == "sin") {
            expect_args(c, 2, line, c.name + "(a,k)");
            term.kind = c.name == "cos" ? ProfileTerm::Kind::Cos : ProfileTerm::Kind::Sin;
            term.k = int(to_long(c.args[1], line, c.name + " wavenumber"));
            if (term.k < 1) throw ConfigError("wavenumber must be >= 1", line);
        } else if (c.name == "gauss") {
            expect_args(c, 3, line, "gauss(a,x0,sigma)");
            term.kind = ProfileTerm::Kind::Gauss;
            term.center = to_double(c.args[1], line, "gauss center");
            term.sigma = to_double(c.args[2], line, "gauss width");
            if (!(term.sigma > 0)) throw ConfigError("gauss width must be > 0", line);
        } else if (c.name == "swirl") {
            expect_args(c, 1, line, "swirl(a)");
            term.kind = ProfileTerm::Kind::Swirl;
        } else {
            throw ConfigError("invalid profile term '" + trim(part) + "'", line);
        }
        term.amp = to_double(c.args[0], line, c.name + " amplitude");
        prof.terms.push_back(term);
    }
    return prof;
}

Kernel parse_kernel(const std::string& text, int line) {
    Call c = parse_call(text, line);
    Kernel k;
    if (c.name == "none" && c.args.empty()) {
        k.kind = Kernel::Kind::None;
    } else if (c.name == "quadratic" && c.args.empty()) {
        k.kind = Kernel::Kind::Quadratic;
    } else if (c.name == "constant") {
        expect_args(c, 1, line, "constant(c)");
        k.kind = Kernel::Kind::Constant;
        k.param = to_double(c.args[0], line, "constant kernel value");
    } else if (c.name == "gaussian") {
        expect_args(c, 1, line, "gaussian(sigma)");
        k.kind = Kernel::Kind::Gaussian;
        k.param = to_double(c.args[0], line, "gaussian width");
        if (!(k.param > 0)) throw ConfigError("gaussian width must be > 0", line);
    } else {
        throw ConfigError("invalid kernel preset '" + trim(text) + "'", line);
    }
    return k;
}

Confinement parse_confinement(const std::string& text, int line) {
    Call c = parse_call(text, line);
    Confinement v;
    if (c.name == "none" && c.args.empty()) {
        v.kind = Confinement::Kind::None;
    } else if (c.name == "quadratic") {
        v.kind = Confinement::Kind::Quadratic;
        if (c.args.size() > 1) throw ConfigError("invalid preset 'quadratic': expected quadratic or quadratic(center)", line);
        if (c.args.size() == 1) v.center = to_double(c.args[0], line, "confinement center");
    } else {
        throw ConfigError("invalid confinement preset '" + trim(text) + "'", line);
    }
    return v;
}

SimConfig parse_config(const std::string& text) {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"domain", {"dim"}},
        {"discretization", {"K", "panels", "order", "integrator", "dt", "cfl"}},
        {"physics", {"system", "poisson", "advection", "eps", "gamma", "forcing", "rho0", "u0"}},
        {"kernels", {"v", "w", "psi"}},
        {"run", {"T", "output_every", "snapshots", "seed"}},
    };
    SimConfig c;
    std::map<std::string, int> seen;
    std::string section;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = raw;
        std::size_t cpos = s.find_first_of("#;");
        if (cpos != std::string::npos) s = s.substr(0, cpos);
        s = trim(s);
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("malformed section header '" + s + "'", line);
            section = trim(s.substr(1, s.size() - 2));
            if (!schema.count(section)) throw ConfigError("unknown section [" + section + "]", line);
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key = value, got '" + s + "'", line);
        std::string key = trim(s.substr(0, eq)), val = trim(s.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside of a section", line);
        if (!schema.at(section).count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]", line);
        std::string full = section + "." + key;
        if (seen.count(full)) throw ConfigError("duplicate key '" + key + "' in [" + section + "]", line);
        seen[full] = line;

        if (full == "domain.dim") {
            c.dim = int(to_long(val, line, key));
            if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2", line);
        } else if (full == "discretization.K") {
            c.K = int(to_long(val, line, key));
            if (c.K < 1) throw ConfigError("K must be >= 1", line);
        } else if (full == "discretization.panels") {
            c.panels = int(to_long(val, line, key));
            if (c.panels < 1) throw ConfigError("panels must be >= 1", line);
        } else if (full == "discretization.order") {
            c.order = int(to_long(val, line, key));
            if (c.order < 1 || c.order > 64) throw ConfigError("order must be in [1, 64]", line);
        } else if (full == "discretization.integrator") {
            if (val == "auto") c.integrator = IntegratorKind::Auto;
            else if (val == "rk4") c.integrator = IntegratorKind::RK4;
            else if (val == "imex") c.integrator = IntegratorKind::IMEX;
            else throw ConfigError("invalid integrator '" + val + "' (auto, rk4 or imex)", line);
        } else if (full == "discretization.dt") {
            c.dt = to_double(val, line, key);
            if (!(c.dt > 0)) throw ConfigError("dt must be > 0", line);
        } else if (full == "discretization.cfl") {
            c.cfl = to_double(val, line, key);
            if (!(c.cfl > 0)) throw ConfigError("cfl must be > 0", line);
        } else if (full == "physics.system") {
            if (val == "euler-poisson") c.system = SystemKind::EulerPoisson;
            else if (val == "euler-alignment") c.system = SystemKind::EulerAlignment;
            else throw ConfigError("invalid system '" + val + "' (euler-poisson or euler-alignment)", line);
        } else if (full == "physics.poisson") {
            c.poisson = to_bool(val, line, key);
        } else if (full == "physics.advection") {
            c.advection = to_bool(val, line, key);
        } else if (full == "physics.eps") {
            c.eps = to_double(val, line, key);
            if (!(c.eps >= 0)) throw ConfigError("eps must be >= 0", line);
        } else if (full == "physics.gamma") {
            c.kernels.gamma = to_double(val, line, key);
            if (!(c.kernels.gamma >= 0)) throw ConfigError("gamma must be >= 0", line);
        } else if (full == "physics.forcing") {
            if (val == "none") c.forcing = ForcingKind::None;
            else if (val == "stationary") c.forcing = ForcingKind::Stationary;
            else throw ConfigError("invalid forcing '" + val + "' (none or stationary)", line);
        } else if (full == "physics.rho0") {
            c.rho0 = parse_profile(val, line);
        } else if (full == "physics.u0") {
            c.u0 = parse_profile(val, line);
        } else if (full == "kernels.v") {
            c.kernels.v = parse_confinement(val, line);
        } else if (full == "kernels.w") {
            c.kernels.w = parse_kernel(val, line);
            if (c.kernels.w.kind == Kernel::Kind::Constant)
                throw ConfigError("interaction kernel must be quadratic, gaussian or none", line);
        } else if (full == "kernels.psi") {
            c.kernels.psi = parse_kernel(val, line);
            if (c.kernels.psi.kind == Kernel::Kind::Quadratic)
                throw ConfigError("alignment kernel must be constant, gaussian or none", line);
            if (c.kernels.psi.kind == Kernel::Kind::Constant && c.kernels.psi.param < 0)
                throw ConfigError("alignment kernel must be nonnegative", line);
        } else if (full == "run.T") {
            c.T = to_double(val, line, key);
            if (!(c.T > 0)) throw ConfigError("T must be > 0", line);
        } else if (full == "run.output_every") {
            c.output_every = to_double(val, line, key);
            if (!(c.output_every > 0)) throw ConfigError("output_every must be > 0", line);
        } else if (full == "run.snapshots") {
            c.snapshots = to_bool(val, line, key);
        } else if (full == "run.seed") {
            long v = to_long(val, line, key);
            if (v < 0) throw ConfigError("seed must be >= 0", line);
            c.seed = std::uint64_t(v);
        }
    }

    bool has_p = seen.count("discretization.panels"), has_q = seen.count("discretization.order");
    if (!has_p || !has_q) {
        int p = 0, q = 0;
        SimConfig::default_resolution(c.dim, c.K, p, q);
        if (!has_q) c.order = q;
        if (!has_p) {
            int need = p * q;
            c.panels = std::max(1, (need + c.order - 1) / c.order);
        }
    }
    if (c.panels * c.order < 2 * c.K + 2) {
        int at = has_p ? seen["discretization.panels"] : (has_q ? seen["discretization.order"] : seen["discretization.K"]);
        throw ConfigError("quadrature with " + std::to_string(c.panels * c.order) + " nodes per axis underresolves K = " +
                              std::to_string(c.K),
                          at);
    }
    for (const auto& t : c.u0.terms)
        if (t.kind == ProfileTerm::Kind::Swirl && c.dim != 2)
            throw ConfigError("swirl velocity requires dimension 2", seen.count("physics.u0") ? seen["physics.u0"] : 0);
    c.validate();
    return c;
}

SimConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const SimConfig& c) {
    std::ostringstream o;
    auto b = [](bool v) { return v ? "true" : "false"; };
    o << "[domain]\n"
      << "dim = " << c.dim << "\n\n"
      << "[discretization]\n"
      << "K = " << c.K << "\n"
      << "panels = " << c.panels << "\n"
      << "order = " << c.order << "\n"
      << "integrator = " << integrator_name(c.integrator) << "\n"
      << "dt = " << format_number(c.dt) << "\n"
      << "cfl = " << format_number(c.cfl) << "\n\n"
      << "[physics]\n"
      << "system = " << (c.system == SystemKind::EulerPoisson ? "euler-poisson" : "euler-alignment") << "\n"
      << "poisson = " << b(c.poisson) << "\n"
      << "advection = " << b(c.advection) << "\n"
      << "eps = " << format_number(c.eps) << "\n"
      << "gamma = " << format_number(c.kernels.gamma) << "\n"
      << "forcing = " << (c.forcing == ForcingKind::None ? "none" : "stationary") << "\n";
    auto profile = [](const Profile& p) {
        if (p.terms.empty()) return std::string("zero");
        std::string s;
        for (std::size_t i = 0; i < p.terms.size(); ++i) {
            const ProfileTerm& t = p.terms[i];
            std::string a = format_number(t.amp);
            if (i) s += " + ";
            switch (t.kind) {
                case ProfileTerm::Kind::Const: s += "const(" + a + ")"; break;
                case ProfileTerm::Kind::Cos: s += "cos(" + a + "," + std::to_string(t.k) + ")"; break;
                case ProfileTerm::Kind::Sin: s += "sin(" + a + "," + std::to_string(t.k) + ")"; break;
                case ProfileTerm::Kind::Gauss:
                    s += "gauss(" + a + "," + format_number(t.center) + "," + format_number(t.sigma) + ")";
                    break;
                case ProfileTerm::Kind::Swirl: s += "swirl(" + a + ")"; break;
            }
        }
        return s;
    };
    auto kernel = [](const Kernel& k) {
        switch (k.kind) {
            case Kernel::Kind::None: return std::string("none");
            case Kernel::Kind::Quadratic: return std::string("quadratic");
            case Kernel::Kind::Constant: return "constant(" + format_number(k.param) + ")";
            case Kernel::Kind::Gaussian: return "gaussian(" + format_number(k.param) + ")";
        }
        return std::string("none");
    };
    o << "rho0 = " << profile(c.rho0) << "\n"
      << "u0 = " << profile(c.u0) << "\n\n"
      << "[kernels]\n"
      << "v = "
      << (c.kernels.v.kind == Confinement::Kind::None ? std::string("none")
                                                      : "quadratic(" + format_number(c.kernels.v.center) + ")")
      << "\n"
      << "w = " << kernel(c.kernels.w) << "\n"
      << "psi = " << kernel(c.kernels.psi) << "\n\n"
      << "[run]\n"
      << "T = " << format_number(c.T) << "\n"
      << "output_every = " << format_number(c.output_every) << "\n"
      << "snapshots = " << b(c.snapshots) << "\n"
      << "seed = " << c.seed << "\n";
    return o.str();
}

std::uint64_t config_hash(const SimConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : serialize_config(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace epsim
