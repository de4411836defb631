#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "impscat/carleman.hpp"
#include "impscat/errors.hpp"
#include "impscat/forward.hpp"
#include "impscat/geometry.hpp"
#include "impscat/parallel.hpp"
#include "impscat/stability.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace impscat;
using namespace impscat::cli;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

/// Thrown after partial outputs are written when the command itself reports failure.
struct CommandFailure
{
    std::string type;
    std::string message;
};

std::string num(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// temp file + rename so readers never see a partial file
void write_atomic(const fs::path& path, const std::string& content)
{
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out)
            throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

class Table
{
  public:
    explicit Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

    void add(std::vector<std::string> row) { rows_.push_back(std::move(row)); }

    std::string csv() const
    {
        std::ostringstream os;
        for (std::size_t i = 0; i < columns_.size(); ++i)
            os << (i ? "," : "") << columns_[i];
        os << '\n';
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i)
                os << (i ? "," : "") << r[i];
            os << '\n';
        }
        return os.str();
    }

    json records() const
    {
        json out = json::array();
        for (const auto& r : rows_) {
            json rec = json::object();
            for (std::size_t i = 0; i < r.size(); ++i) {
                char* end = nullptr;
                const double v = std::strtod(r[i].c_str(), &end);
                if (end && *end == '\0' && !r[i].empty())
                    rec[columns_[i]] = v;
                else
                    rec[columns_[i]] = r[i];
            }
            out.push_back(rec);
        }
        return out;
    }

  private:
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

class Run
{
  public:
    explicit Run(RunConfig cfg) : cfg_(std::move(cfg)) {}

    int execute();

  private:
    RunConfig cfg_;
    json summary_ = json::object();
    std::vector<std::string> written_;

    fs::path path_for(const std::string& what, const std::string& ext) const
    {
        return fs::path(cfg_.output.dir) / (cfg_.output.prefix + "_" + what + "." + ext);
    }

    void emit_table(const std::string& what, const Table& t)
    {
        const bool csv = cfg_.output.format == "csv";
        const fs::path p = path_for(what, csv ? "csv" : "json");
        write_atomic(p, csv ? t.csv() : t.records().dump(2) + "\n");
        written_.push_back(p.string());
    }

    void emit_summary()
    {
        const fs::path p = path_for("summary", "json");
        summary_["command"] = to_string(cfg_.command);
        summary_["config"] = to_json(cfg_);
        summary_["notes"] = cfg_.notes;
        written_.push_back(p.string());
        summary_["outputs"] = written_;
        write_atomic(p, summary_.dump(2) + "\n");
    }

    WaveContext wave() const
    {
        const auto& d = cfg_.wave.direction;
        WaveContext ctx{cfg_.wave.k, Vec3(d[0], d[1], d[2]).normalized()};
        ctx.validate();
        return ctx;
    }

    ObstacleGeometry geometry() const
    {
        if (cfg_.geometry.coefficients.empty())
            return ObstacleGeometry::sphere(cfg_.geometry.radius, cfg_.geometry.exterior_radius);
        return ObstacleGeometry::perturbed_sphere(cfg_.geometry.radius, cfg_.geometry.coefficients,
                                                  cfg_.geometry.exterior_radius);
    }

    static ImpedanceField impedance(const ImpedanceSpec& s)
    {
        const ImpedanceField f =
            s.has_coefficients ? ImpedanceField::from_coefficients(s.coefficients) : ImpedanceField::constant(s.constant);
        f.check_admissible();
        return f;
    }

    SolverOptions solver() const
    {
        SolverOptions o;
        o.band_limit = cfg_.solver.band_limit;
        o.eta = cfg_.solver.eta;
        o.resolution_tol = cfg_.solver.resolution_tol;
        return o;
    }

    int farfield_order(const ObstacleGeometry& g) const
    {
        if (cfg_.solver.farfield_order > 0)
            return cfg_.solver.farfield_order;
        return g.is_sphere() ? cfg_.solver.band_limit : cfg_.solver.band_limit + 8;
    }

    unsigned threads() const { return cfg_.threads == 0 ? default_thread_count() : cfg_.threads; }

    static Table farfield_table(const FarField& f)
    {
        Table t({"cos_theta", "phi", "x", "y", "z", "re", "im"});
        for (std::size_t q = 0; q < f.rule.size(); ++q) {
            const Vec3& d = f.rule.directions[q];
            t.add({num(f.rule.cos_theta[q]), num(f.rule.azimuth[q]), num(d.x()), num(d.y()), num(d.z()),
                   num(f.values[q].real()), num(f.values[q].imag())});
        }
        return t;
    }

    void forward();
    void farfield_cmd();
    void mie();
    void carleman_check();
    void three_sphere();
    void chain();
    void stability_sweep_cmd();
    void lemma51();
    void reconstruct_cmd();
    void ga2_check();
};

void Run::forward()
{
    const auto g = geometry();
    const auto sol = solve_density(wave(), g, impedance(cfg_.impedance), solver());
    const BoundaryTraces tr = boundary_traces(sol);
    Table t({"x", "y", "z", "re_u", "im_u", "re_dnu", "im_dnu"});
    for (std::size_t q = 0; q < tr.points.size(); ++q) {
        const Vec3& x = tr.points[q].x;
        t.add({num(x.x()), num(x.y()), num(x.z()), num(tr.u[q].real()), num(tr.u[q].imag()),
               num(tr.dnu[q].real()), num(tr.dnu[q].imag())});
    }
    emit_table("boundary", t);
    const EnergyBalance e = energy_identity(sol);
    summary_["energy"] = {{"flux", e.flux}, {"absorption", e.absorption}, {"residual", e.residual}};
    summary_["farfield_l2_norm"] = farfield(sol, farfield_order(g)).l2_norm();
}

void Run::farfield_cmd()
{
    const auto g = geometry();
    const auto sol = solve_density(wave(), g, impedance(cfg_.impedance), solver());
    const FarField f = farfield(sol, farfield_order(g));
    emit_table("farfield", farfield_table(f));
    summary_["farfield_l2_norm"] = f.l2_norm();
}

void Run::mie()
{
    const auto g = geometry();
    if (!g.is_sphere())
        throw DomainError("mie: geometry must be a sphere (no coefficients)");
    const ImpedanceField lam = impedance(cfg_.impedance);
    if (!lam.is_constant())
        throw DomainError("mie: impedance must be constant");
    const int order = cfg_.solver.farfield_order > 0 ? cfg_.solver.farfield_order : 24;
    const FarField f = mie_farfield(wave(), cfg_.geometry.radius, lam.constant_value(), order);
    emit_table("farfield", farfield_table(f));
    summary_["farfield_l2_norm"] = f.l2_norm();
}

void Run::carleman_check()
{
    const CarlemanSetup s = make_carleman_setup(Vec3::Zero(), cfg_.carleman.rho, cfg_.carleman.d);
    const auto fns = carleman_test_functions(cfg_.seed, cfg_.carleman.count);
    const CarlemanSuiteReport rep = carleman_suite(s, fns, cfg_.carleman.multipliers, {}, threads());
    Table t({"function", "multiplier", "log_lhs", "log_rhs", "log_ratio", "holds"});
    for (const auto& c : rep.cases)
        t.add({c.function, num(c.multiplier), num(c.sides.log_lhs), num(c.sides.log_rhs),
               num(c.sides.log_ratio()), c.sides.holds() ? "true" : "false"});
    emit_table("carleman", t);
    summary_["setup"] = {{"lambda", s.lambda_w}, {"tau", s.tau}, {"m", s.m}, {"M", s.M}};
    summary_["cases"] = rep.cases.size();
    summary_["failures"] = rep.failures;
    summary_["monotonicity_violations"] = rep.monotonicity_violations;
    summary_["all_pass"] = rep.failures == 0;
}

void Run::three_sphere()
{
    const auto& c = cfg_.three_sphere;
    const auto fam = plane_wave_family(c.k, cfg_.seed, c.count);
    const ThreeSphereReport rep = three_sphere_check(fam, Vec3(c.center[0], c.center[1], c.center[2]), c.r);
    Table t({"member", "n1", "n2", "n3"});
    for (const auto& m : rep.members)
        t.add({m.name, num(m.n1), num(m.n2), num(m.n3)});
    emit_table("three_sphere", t);
    summary_["alpha_hat"] = rep.alpha_hat;
    summary_["log_C"] = rep.log_C;
    summary_["C"] = rep.C();
    summary_["monotonicity_violations"] = rep.monotonicity_violations;
    summary_["degenerate"] = rep.degenerate;
}

void Run::chain()
{
    const auto& c = cfg_.chain;
    const auto g = geometry();
    const Vec3 xt = g.surface_point(Vec3(c.direction[0], c.direction[1], c.direction[2]).normalized()).x;
    const ConeChain ch = build_cone_chain(xt, c.r, g, c.R);
    const ChainDiagnostics d = chain_diagnostics(ch, g, c.R);
    const ChainBound b = chain_lower_bound(ch, c.I0, c.M_tilde, c.C, c.alpha, c.r);
    Table t({"k", "cx", "cy", "cz", "radius", "distance", "log_I", "log_I_closed", "log_I_radii"});
    for (int k = 0; k <= ch.count; ++k)
        t.add({std::to_string(k), num(ch.centers[k].x()), num(ch.centers[k].y()), num(ch.centers[k].z()),
               num(ch.radii[k]), num(ch.distances[k]), num(b.log_I[k]), num(b.log_I_closed[k]),
               num(b.log_I_radii[k])});
    emit_table("chain", t);
    summary_["N"] = ch.count;
    summary_["diagnostics"] = {{"max_nesting_excess", d.max_nesting_excess},
                               {"min_clearance", d.min_clearance},
                               {"max_outer_excess", d.max_outer_excess},
                               {"final_inner_margin", d.final_inner_margin}};
    summary_["bound"] = {{"max_exponent_mismatch", b.max_exponent_mismatch},
                         {"log_I0_recovered", b.log_I0_recovered},
                         {"gamma", b.gamma},
                         {"beta", b.beta},
                         {"s", b.s},
                         {"eta", b.eta},
                         {"log_lower_bound", b.log_lower_bound},
                         {"log_simplified_bound", b.log_simplified_bound}};
}

void Run::stability_sweep_cmd()
{
    const auto shape = cfg_.sweep.shape.empty() ? default_perturbation_shape()
                                                : ImpedanceField::from_coefficients(cfg_.sweep.shape);
    const StabilitySweep s = stability_sweep(impedance(cfg_.impedance), shape, cfg_.sweep.epsilons, wave(),
                                             geometry(), solver(), cfg_.sweep.sigma_grid, threads());
    Table t({"epsilon", "delta", "dsup", "bound", "C_fit", "sigma_fit"});
    for (const auto& r : s.records)
        t.add({num(r.epsilon), num(r.delta), num(r.dsup), num(r.bound), num(s.C_fit), num(s.sigma_fit)});
    emit_table("sweep", t);
    summary_["C_fit"] = s.C_fit;
    summary_["sigma_fit"] = s.sigma_fit;
    summary_["delta_monotone"] = s.delta_monotone;
}

void Run::lemma51()
{
    const Lemma51Result r = lemma51_check(wave(), geometry(), impedance(cfg_.impedance),
                                          cfg_.lemma51.candidates, solver(), cfg_.lemma51.grid_order);
    Table t({"candidate", "sup_scattered", "min_total"});
    for (std::size_t i = 0; i < r.candidates.size(); ++i)
        t.add({num(r.candidates[i]), num(r.sup_scattered[i]), num(r.min_total[i])});
    emit_table("lemma51", t);
    summary_["found"] = r.found;
    if (r.found)
        summary_["R"] = r.R;
    if (!r.found)
        throw CommandFailure{"NotFound", "no candidate radius has |u| >= 1/2 on its shells"};
}

void Run::reconstruct_cmd()
{
    const auto ctx = wave();
    const auto g = geometry();
    const SolverOptions opts = solver();
    FarField data = farfield(solve_density(ctx, g, impedance(cfg_.impedance), opts), farfield_order(g));
    if (cfg_.reconstruct.noise > 0.0) {
        std::mt19937_64 gen(cfg_.seed);
        std::normal_distribution<double> nd;
        const double sd = cfg_.reconstruct.noise * data.l2_norm() / std::sqrt(4.0 * kPi);
        for (auto& v : data.values)
            v += sd * cplx(nd(gen), nd(gen)) / std::sqrt(2.0);
    }
    ReconstructionOptions ro;
    ro.degree = cfg_.reconstruct.degree;
    ro.max_iterations = cfg_.reconstruct.max_iterations;
    ro.threads = threads();
    const ReconstructionResult r =
        reconstruct(data, ctx, g, impedance(cfg_.reconstruct.prior), cfg_.reconstruct.reg, opts, ro);
    Table t({"index", "coefficient"});
    for (std::size_t i = 0; i < r.lambda.coefficients().size(); ++i)
        t.add({std::to_string(i), num(r.lambda.coefficients()[i])});
    emit_table("reconstruction", t);
    summary_["coefficients"] = r.lambda.coefficients();
    summary_["misfit"] = r.misfit;
    summary_["gradient_norm"] = r.gradient_norm;
    summary_["iterations"] = r.iterations;
    summary_["converged"] = r.converged;
    if (r.lambda.is_constant())
        summary_["constant_value"] = r.lambda.constant_value();
}

void Run::ga2_check()
{
    const GA2Fit f = check_GA2(geometry(), cfg_.ga2.radii);
    Table t({"r", "cap_radius"});
    for (std::size_t i = 0; i < f.radii.size(); ++i)
        t.add({num(f.radii[i]), num(f.cap_radius[i])});
    emit_table("ga2", t);
    summary_["C"] = f.C;
    summary_["kappa"] = f.kappa;
}

int Run::execute()
{
    int status = 0;
    json err;
    try {
        switch (cfg_.command) {
        case Command::Forward: forward(); break;
        case Command::Farfield: farfield_cmd(); break;
        case Command::Mie: mie(); break;
        case Command::CarlemanCheck: carleman_check(); break;
        case Command::ThreeSphere: three_sphere(); break;
        case Command::Chain: chain(); break;
        case Command::StabilitySweep: stability_sweep_cmd(); break;
        case Command::Lemma51: lemma51(); break;
        case Command::Reconstruct: reconstruct_cmd(); break;
        case Command::Ga2Check: ga2_check(); break;
        }
    } catch (const CommandFailure& f) {
        status = kExitNumerical;
        err = {{"type", f.type}, {"message", f.message}};
    } catch (const DomainError& e) {
        status = kExitValidation;
        err = {{"type", "DomainError"}, {"message", e.what()}};
    } catch (const ValidationError& e) {
        status = kExitValidation;
        err = {{"type", "ValidationError"}, {"message", e.what()}};
    } catch (const GeometryError& e) {
        status = kExitValidation;
        err = {{"type", "GeometryError"}, {"message", e.what()}};
    } catch (const SingularityError& e) {
        status = kExitNumerical;
        err = {{"type", "SingularityError"}, {"message", e.what()}};
    } catch (const ConvergenceError& e) {
        status = kExitNumerical;
        err = {{"type", "ConvergenceError"}, {"message", e.what()}};
    } catch (const ResolutionError& e) {
        status = kExitNumerical;
        err = {{"type", "ResolutionError"}, {"message", e.what()}};
    } catch (const AliasingError& e) {
        status = kExitNumerical;
        err = {{"type", "AliasingError"}, {"message", e.what()}};
    }
    if (status != 0) {
        err["exit_code"] = status;
        err["command"] = to_string(cfg_.command);
        summary_["error"] = err;
    }
    emit_summary();
    if (status != 0)
        std::cerr << json{{"error", err}}.dump() << std::endl;
    return status;
}

void report_config_error(const ConfigError& e)
{
    const json rec{{"error",
                    {{"type", "ConfigError"},
                     {"message", "invalid configuration"},
                     {"violations", e.violations()},
                     {"exit_code", kExitValidation}}}};
    std::cerr << rec.dump() << std::endl;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Impedance scattering solver and verification harness"};
    std::string config_path;
    std::vector<std::string> overrides;
    app.add_option("config", config_path, "YAML run configuration")->required()->check(CLI::ExistingFile);
    app.add_option("--set", overrides, "Override a config field, e.g. --set wave.k=2")->take_all();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitValidation;
    }

    std::ifstream in(config_path);
    std::stringstream buf;
    buf << in.rdbuf();

    RunConfig cfg;
    try {
        cfg = parse_config_text(buf.str(), overrides);
    } catch (const ConfigError& e) {
        report_config_error(e);
        return kExitValidation;
    }
    for (const auto& n : cfg.notes)
        std::cerr << "note: " << n << '\n';

    try {
        return Run(std::move(cfg)).execute();
    } catch (const std::exception& e) {
        std::cerr << json{{"error", {{"type", "IOError"}, {"message", e.what()}, {"exit_code", kExitNumerical}}}}.dump()
                  << std::endl;
        return kExitNumerical;
    }
}
