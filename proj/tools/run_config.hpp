#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <yaml-cpp/yaml.h>

namespace impscat::cli {

enum class Command {
    Forward,
    Farfield,
    Mie,
    CarlemanCheck,
    ThreeSphere,
    Chain,
    StabilitySweep,
    Lemma51,
    Reconstruct,
    Ga2Check
};

const std::vector<std::string>& command_names();
std::string to_string(Command c);

/// Malformed document or unusable override; `violations` lists every problem found.
class ConfigError : public std::runtime_error
{
  public:
    explicit ConfigError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

  private:
    std::vector<std::string> violations_;
};

struct ImpedanceSpec
{
    bool has_coefficients = false;
    double constant = 1.0;
    std::vector<double> coefficients;
};

struct RunConfig
{
    Command command = Command::Forward;
    std::uint64_t seed = 12345;
    unsigned threads = 0; // 0: all available processors

    struct
    {
        double k = 1.0;
        std::array<double, 3> direction{0.0, 0.0, 1.0};
    } wave;

    struct
    {
        double radius = 1.0;
        std::vector<double> coefficients;
        double exterior_radius = -1.0;
    } geometry;

    ImpedanceSpec impedance;

    struct
    {
        int band_limit = 24;
        double eta = 0.0; // 0: max(1, k)
        double resolution_tol = 1e-10;
        int farfield_order = -1;
    } solver;

    struct
    {
        std::vector<double> epsilons{0.1, 0.05, 0.025, 0.0125};
        std::vector<double> shape; // empty: 1 + cos θ
        std::vector<double> sigma_grid{0.25, 0.5, 1.0, 2.0};
    } sweep;

    struct
    {
        double rho = 1.0;
        double d = 1.0;
        int count = 50;
        std::vector<double> multipliers{1.0, 2.0, 4.0};
    } carleman;

    struct
    {
        double k = 2.0;
        double r = 0.2;
        int count = 8;
        std::array<double, 3> center{0.0, 0.0, 0.0};
    } three_sphere;

    struct
    {
        std::array<double, 3> direction{0.0, 0.0, 1.0};
        double r = 0.1;
        double R = 8.0;
        double I0 = 1e-3;
        double M_tilde = 2.0;
        double C = 1.5;
        double alpha = 0.5;
    } chain;

    struct
    {
        std::vector<double> candidates{1.5, 3.0, 6.0, 12.0, 24.0, 48.0};
        int grid_order = 16;
    } lemma51;

    struct
    {
        ImpedanceSpec prior{false, 0.5, {}};
        double reg = 1e-10;
        int degree = 0;
        double noise = 0.0;
        int max_iterations = 50;
    } reconstruct;

    struct
    {
        std::vector<double> radii{0.01, 0.02, 0.04, 0.08, 0.16};
    } ga2;

    struct
    {
        std::string dir = ".";
        std::string prefix = "impscat";
        std::string format = "csv";
    } output;

    std::vector<std::string> notes; // normalisations applied while parsing
};

/// Applies `key.path=value` to the document; the value is read as YAML.
void apply_override(YAML::Node& root, const std::string& assignment);

/// Validated config with defaults filled in. Throws ConfigError listing every violation.
RunConfig parse_config(const YAML::Node& root);
RunConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});

nlohmann::json to_json(const RunConfig& cfg);

} // namespace impscat::cli
