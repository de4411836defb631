#include "run_config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace impscat::cli {

const std::vector<std::string>& command_names()
{
    static const std::vector<std::string> names{"forward",       "farfield", "mie",
                                                "carleman-check", "three-sphere", "chain",
                                                "stability-sweep", "lemma51", "reconstruct",
                                                "ga2-check"};
    return names;
}

std::string to_string(Command c) { return command_names()[static_cast<std::size_t>(c)]; }

namespace {

std::string join(const std::vector<std::string>& v)
{
    std::string out;
    for (const auto& s : v)
        out += (out.empty() ? "" : "; ") + s;
    return out;
}

std::string where(const YAML::Node& n)
{
    const YAML::Mark m = n.Mark();
    if (m.line < 0)
        return "";
    return " (line " + std::to_string(m.line + 1) + ")";
}

// Collects violations instead of stopping at the first one.
class Reader
{
  public:
    std::vector<std::string> errors;

    void fail(const std::string& field, const std::string& what, const YAML::Node& n = {})
    {
        errors.push_back(field + ": " + what + (n.IsDefined() ? where(n) : ""));
    }

    YAML::Node section(const YAML::Node& root, const std::string& name,
                       const std::set<std::string>& keys)
    {
        const YAML::Node n = root[name];
        if (!n)
            return {};
        if (!n.IsMap()) {
            fail(name, "expected a mapping", n);
            return {};
        }
        for (const auto& kv : n) {
            const std::string key = kv.first.as<std::string>();
            if (!keys.count(key))
                fail(name + "." + key, "unknown field", kv.first);
        }
        return n;
    }

    template <class T>
    void read(const YAML::Node& parent, const std::string& section, const std::string& key, T& out)
    {
        if (!parent || !parent[key])
            return;
        const YAML::Node n = parent[key];
        try {
            out = n.as<T>();
        } catch (const YAML::Exception&) {
            fail(field(section, key), "cannot convert '" + dump(n) + "'", n);
        }
    }

    template <std::size_t N>
    void read(const YAML::Node& parent, const std::string& section, const std::string& key,
              std::array<double, N>& out)
    {
        std::vector<double> v;
        read(parent, section, key, v);
        if (!parent || !parent[key] || v.empty())
            return;
        if (v.size() != N) {
            fail(field(section, key), "expected " + std::to_string(N) + " numbers", parent[key]);
            return;
        }
        std::copy(v.begin(), v.end(), out.begin());
    }

    void read_impedance(const YAML::Node& n, const std::string& name, ImpedanceSpec& out)
    {
        if (!n)
            return;
        if (n.IsScalar()) {
            out.has_coefficients = false;
            try {
                out.constant = n.as<double>();
            } catch (const YAML::Exception&) {
                fail(name, "expected a number or a mapping", n);
            }
            return;
        }
        const YAML::Node s = section_of(n, name, {"constant", "coefficients"});
        if (s["constant"] && s["coefficients"])
            fail(name, "give either constant or coefficients, not both", n);
        read(s, name, "constant", out.constant);
        if (s["coefficients"]) {
            out.has_coefficients = true;
            read(s, name, "coefficients", out.coefficients);
        }
    }

  private:
    static std::string field(const std::string& section, const std::string& key)
    {
        return section.empty() ? key : section + "." + key;
    }

    static std::string dump(const YAML::Node& n)
    {
        std::ostringstream os;
        os << n;
        return os.str();
    }

    YAML::Node section_of(const YAML::Node& n, const std::string& name, const std::set<std::string>& keys)
    {
        if (!n.IsMap()) {
            fail(name, "expected a mapping", n);
            return {};
        }
        for (const auto& kv : n)
            if (!keys.count(kv.first.as<std::string>()))
                fail(name + "." + kv.first.as<std::string>(), "unknown field", kv.first);
        return n;
    }
};

bool is_harmonic_count(std::size_t n)
{
    const auto d = static_cast<std::size_t>(std::lround(std::sqrt(double(n))));
    return n > 0 && d * d == n;
}

void check_impedance(const ImpedanceSpec& s, const std::string& name, std::vector<std::string>& errors)
{
    if (!s.has_coefficients) {
        if (!std::isfinite(s.constant) || s.constant < 0.0)
            errors.push_back(name + ".constant: impedance must be finite and nonnegative");
        return;
    }
    if (!is_harmonic_count(s.coefficients.size()))
        errors.push_back(name + ".coefficients: count must be (degree + 1)^2");
}

} // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : std::runtime_error("invalid configuration: " + join(violations)), violations_(std::move(violations))
{
}

void apply_override(YAML::Node& root, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError({"--set " + assignment + ": expected key=value"});
    const std::string path = assignment.substr(0, eq);
    YAML::Node value;
    try {
        value = YAML::Load(assignment.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        throw ConfigError({"--set " + path + ": " + e.msg});
    }
    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');)
        keys.push_back(k);
    // walk with fresh handles; yaml-cpp node assignment rebinds rather than copies
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        YAML::Node next = chain.back()[keys[i]];
        if (next && !next.IsMap())
            throw ConfigError({"--set " + path + ": " + keys[i] + " is not a mapping"});
        chain.push_back(next);
    }
    chain.back()[keys.back()] = value;
}

RunConfig parse_config(const YAML::Node& root)
{
    RunConfig c;
    Reader r;
    if (!root || !root.IsMap())
        throw ConfigError({"document: expected a mapping at the top level"});

    const std::set<std::string> top{"command",  "seed",         "threads", "wave",  "geometry",
                                    "impedance", "solver",      "sweep",   "carleman", "three_sphere",
                                    "chain",     "lemma51",     "reconstruct", "ga2", "output"};
    for (const auto& kv : root)
        if (!top.count(kv.first.as<std::string>()))
            r.fail(kv.first.as<std::string>(), "unknown field", kv.first);

    std::string command;
    r.read(root, "", "command", command);
    if (!root["command"])
        r.fail("command", "missing");
    else {
        const auto& names = command_names();
        const auto it = std::find(names.begin(), names.end(), command);
        if (it == names.end())
            r.fail("command", "unrecognised '" + command + "'", root["command"]);
        else
            c.command = static_cast<Command>(it - names.begin());
    }
    r.read(root, "", "seed", c.seed);
    r.read(root, "", "threads", c.threads);

    auto wave = r.section(root, "wave", {"k", "direction"});
    r.read(wave, "wave", "k", c.wave.k);
    r.read(wave, "wave", "direction", c.wave.direction);

    auto geom = r.section(root, "geometry", {"radius", "coefficients", "exterior_radius"});
    r.read(geom, "geometry", "radius", c.geometry.radius);
    r.read(geom, "geometry", "coefficients", c.geometry.coefficients);
    r.read(geom, "geometry", "exterior_radius", c.geometry.exterior_radius);

    r.read_impedance(root["impedance"], "impedance", c.impedance);

    auto solver = r.section(root, "solver", {"band_limit", "eta", "resolution_tol", "farfield_order"});
    r.read(solver, "solver", "band_limit", c.solver.band_limit);
    r.read(solver, "solver", "eta", c.solver.eta);
    r.read(solver, "solver", "resolution_tol", c.solver.resolution_tol);
    r.read(solver, "solver", "farfield_order", c.solver.farfield_order);

    auto sweep = r.section(root, "sweep", {"epsilons", "shape", "sigma_grid"});
    r.read(sweep, "sweep", "epsilons", c.sweep.epsilons);
    r.read(sweep, "sweep", "shape", c.sweep.shape);
    r.read(sweep, "sweep", "sigma_grid", c.sweep.sigma_grid);

    auto carl = r.section(root, "carleman", {"rho", "d", "count", "multipliers"});
    r.read(carl, "carleman", "rho", c.carleman.rho);
    r.read(carl, "carleman", "d", c.carleman.d);
    r.read(carl, "carleman", "count", c.carleman.count);
    r.read(carl, "carleman", "multipliers", c.carleman.multipliers);

    auto three = r.section(root, "three_sphere", {"k", "r", "count", "center"});
    r.read(three, "three_sphere", "k", c.three_sphere.k);
    r.read(three, "three_sphere", "r", c.three_sphere.r);
    r.read(three, "three_sphere", "count", c.three_sphere.count);
    r.read(three, "three_sphere", "center", c.three_sphere.center);

    auto chain = r.section(root, "chain", {"direction", "r", "R", "I0", "M_tilde", "C", "alpha"});
    r.read(chain, "chain", "direction", c.chain.direction);
    r.read(chain, "chain", "r", c.chain.r);
    r.read(chain, "chain", "R", c.chain.R);
    r.read(chain, "chain", "I0", c.chain.I0);
    r.read(chain, "chain", "M_tilde", c.chain.M_tilde);
    r.read(chain, "chain", "C", c.chain.C);
    r.read(chain, "chain", "alpha", c.chain.alpha);

    auto l51 = r.section(root, "lemma51", {"candidates", "grid_order"});
    r.read(l51, "lemma51", "candidates", c.lemma51.candidates);
    r.read(l51, "lemma51", "grid_order", c.lemma51.grid_order);

    auto rec = r.section(root, "reconstruct", {"prior", "reg", "degree", "noise", "max_iterations"});
    if (rec)
        r.read_impedance(rec["prior"], "reconstruct.prior", c.reconstruct.prior);
    r.read(rec, "reconstruct", "reg", c.reconstruct.reg);
    r.read(rec, "reconstruct", "degree", c.reconstruct.degree);
    r.read(rec, "reconstruct", "noise", c.reconstruct.noise);
    r.read(rec, "reconstruct", "max_iterations", c.reconstruct.max_iterations);

    auto ga2 = r.section(root, "ga2", {"radii"});
    r.read(ga2, "ga2", "radii", c.ga2.radii);

    auto out = r.section(root, "output", {"dir", "prefix", "format"});
    r.read(out, "output", "dir", c.output.dir);
    r.read(out, "output", "prefix", c.output.prefix);
    r.read(out, "output", "format", c.output.format);

    // value checks
    auto& e = r.errors;
    auto positive = [&](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            e.push_back(std::string(name) + ": must be positive");
    };
    positive(c.wave.k, "wave.k");
    if (std::hypot(c.wave.direction[0], c.wave.direction[1], c.wave.direction[2]) == 0.0)
        e.push_back("wave.direction: must be nonzero");
    positive(c.geometry.radius, "geometry.radius");
    if (!c.geometry.coefficients.empty() && !is_harmonic_count(c.geometry.coefficients.size()))
        e.push_back("geometry.coefficients: count must be (degree + 1)^2");
    check_impedance(c.impedance, "impedance", e);
    if (c.solver.band_limit < 1)
        e.push_back("solver.band_limit: must be at least 1");
    if (c.solver.eta < 0.0)
        e.push_back("solver.eta: must be nonnegative (0 selects max(1, k))");
    positive(c.solver.resolution_tol, "solver.resolution_tol");
    if (c.solver.farfield_order == 0 || c.solver.farfield_order < -1)
        e.push_back("solver.farfield_order: must be positive or -1");
    if (c.sweep.epsilons.empty())
        e.push_back("sweep.epsilons: must not be empty");
    for (double eps : c.sweep.epsilons)
        if (!(eps >= 0.0))
            e.push_back("sweep.epsilons: entries must be nonnegative");
    if (!c.sweep.shape.empty() && !is_harmonic_count(c.sweep.shape.size()))
        e.push_back("sweep.shape: count must be (degree + 1)^2");
    if (c.sweep.sigma_grid.empty())
        e.push_back("sweep.sigma_grid: must not be empty");
    for (double s : c.sweep.sigma_grid)
        positive(s, "sweep.sigma_grid");
    positive(c.carleman.rho, "carleman.rho");
    positive(c.carleman.d, "carleman.d");
    if (c.carleman.count < 1)
        e.push_back("carleman.count: must be at least 1");
    for (double m : c.carleman.multipliers)
        if (!(m >= 1.0))
            e.push_back("carleman.multipliers: entries must be at least 1");
    positive(c.three_sphere.k, "three_sphere.k");
    positive(c.three_sphere.r, "three_sphere.r");
    if (c.three_sphere.count < 5)
        e.push_back("three_sphere.count: must be at least 5");
    positive(c.chain.r, "chain.r");
    positive(c.chain.R, "chain.R");
    positive(c.chain.I0, "chain.I0");
    positive(c.chain.M_tilde, "chain.M_tilde");
    positive(c.chain.C, "chain.C");
    if (!(c.chain.alpha > 0.0 && c.chain.alpha < 1.0))
        e.push_back("chain.alpha: must lie in (0, 1)");
    if (c.lemma51.candidates.empty())
        e.push_back("lemma51.candidates: must not be empty");
    if (c.lemma51.grid_order < 1)
        e.push_back("lemma51.grid_order: must be at least 1");
    check_impedance(c.reconstruct.prior, "reconstruct.prior", e);
    positive(c.reconstruct.reg, "reconstruct.reg");
    if (c.reconstruct.degree < 0 || c.reconstruct.degree > 4)
        e.push_back("reconstruct.degree: must lie in [0, 4]");
    if (!(c.reconstruct.noise >= 0.0))
        e.push_back("reconstruct.noise: must be nonnegative");
    if (c.reconstruct.max_iterations < 1)
        e.push_back("reconstruct.max_iterations: must be at least 1");
    if (c.ga2.radii.empty())
        e.push_back("ga2.radii: must not be empty");
    for (double rr : c.ga2.radii)
        positive(rr, "ga2.radii");
    if (c.output.format != "csv" && c.output.format != "json")
        e.push_back("output.format: must be csv or json");
    if (c.output.prefix.empty() || c.output.prefix.find('/') != std::string::npos)
        e.push_back("output.prefix: must be a nonempty file name stem");

    if (!e.empty())
        throw ConfigError(std::move(e));

    if (!std::is_sorted(c.sweep.epsilons.begin(), c.sweep.epsilons.end())) {
        std::sort(c.sweep.epsilons.begin(), c.sweep.epsilons.end());
        c.notes.push_back("sweep.epsilons sorted into increasing order");
    }
    const auto last = std::unique(c.sweep.epsilons.begin(), c.sweep.epsilons.end());
    if (last != c.sweep.epsilons.end()) {
        c.sweep.epsilons.erase(last, c.sweep.epsilons.end());
        c.notes.push_back("duplicate sweep.epsilons removed");
    }
    return c;
}

RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides)
{
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& ex) {
        throw ConfigError({"parse error at line " + std::to_string(ex.mark.line + 1) + ", column " +
                           std::to_string(ex.mark.column + 1) + ": " + ex.msg});
    }
    if (!root || root.IsNull())
        root = YAML::Node(YAML::NodeType::Map);
    for (const auto& o : overrides)
        apply_override(root, o);
    return parse_config(root);
}

nlohmann::json to_json(const RunConfig& c)
{
    using nlohmann::json;
    auto imp = [](const ImpedanceSpec& s) {
        return s.has_coefficients ? json{{"coefficients", s.coefficients}} : json{{"constant", s.constant}};
    };
    return json{
        {"command", to_string(c.command)},
        {"seed", c.seed},
        {"threads", c.threads},
        {"wave", {{"k", c.wave.k}, {"direction", c.wave.direction}}},
        {"geometry",
         {{"radius", c.geometry.radius},
          {"coefficients", c.geometry.coefficients},
          {"exterior_radius", c.geometry.exterior_radius}}},
        {"impedance", imp(c.impedance)},
        {"solver",
         {{"band_limit", c.solver.band_limit},
          {"eta", c.solver.eta > 0.0 ? c.solver.eta : std::max(1.0, c.wave.k)},
          {"resolution_tol", c.solver.resolution_tol},
          {"farfield_order", c.solver.farfield_order}}},
        {"sweep",
         {{"epsilons", c.sweep.epsilons}, {"shape", c.sweep.shape}, {"sigma_grid", c.sweep.sigma_grid}}},
        {"carleman",
         {{"rho", c.carleman.rho},
          {"d", c.carleman.d},
          {"count", c.carleman.count},
          {"multipliers", c.carleman.multipliers}}},
        {"three_sphere",
         {{"k", c.three_sphere.k},
          {"r", c.three_sphere.r},
          {"count", c.three_sphere.count},
          {"center", c.three_sphere.center}}},
        {"chain",
         {{"direction", c.chain.direction},
          {"r", c.chain.r},
          {"R", c.chain.R},
          {"I0", c.chain.I0},
          {"M_tilde", c.chain.M_tilde},
          {"C", c.chain.C},
          {"alpha", c.chain.alpha}}},
        {"lemma51", {{"candidates", c.lemma51.candidates}, {"grid_order", c.lemma51.grid_order}}},
        {"reconstruct",
         {{"prior", imp(c.reconstruct.prior)},
          {"reg", c.reconstruct.reg},
          {"degree", c.reconstruct.degree},
          {"noise", c.reconstruct.noise},
          {"max_iterations", c.reconstruct.max_iterations}}},
        {"ga2", {{"radii", c.ga2.radii}}},
        {"output", {{"dir", c.output.dir}, {"prefix", c.output.prefix}, {"format", c.output.format}}}};
}

} // namespace impscat::cli
