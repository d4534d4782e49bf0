#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "opsizer/core.hpp"

namespace opsizer {

/// Uniform simulator interface. Implementations are reentrant; simulate() never
/// throws for simulation failures, it returns the infeasible marker instead.
class Simulator {
public:
    virtual ~Simulator() = default;
    virtual const DesignSpace& space() const = 0;
    virtual SimOutcome simulate(const DesignPoint& point) const = 0;
};

// --- analytic two-stage op-amp surrogate -------------------------------------

struct SurrogateConstants {
    double kprime = 100.0;  // uA/V^2
    double lambda = 0.1;    // 1/V
    double cl = 5.0;        // pF
};

/// ib in uA, W/L ratios dimensionless, cc in pF.
struct SurrogateParams {
    double ib = 100.0;
    double w1_l1 = 100.0;
    double w6_l6 = 100.0;
    double cc = 2.0;
};

/// Square-law two-stage Miller op-amp. Stage currents ib/2 (input pair) and 2 ib
/// (output stage); PM includes the right-half-plane zero and is clamped to
/// [0, 150] degrees; SR = ib / (2 cc); IDC = 3 ib.
MetricVector surrogate_model(const SurrogateParams& p, const SurrogateConstants& c = {});

/// ib [1, 500] uA, w1_l1 [1, 500], w6_l6 [1, 500], cc [0.1, 20] pF; all log-scaled.
DesignSpace surrogate_space();

class SurrogateSimulator final : public Simulator {
public:
    explicit SurrogateSimulator(SurrogateConstants constants = {});
    const DesignSpace& space() const override { return space_; }
    SimOutcome simulate(const DesignPoint& point) const override;
    const SurrogateConstants& constants() const { return constants_; }

private:
    DesignSpace space_;
    SurrogateConstants constants_;
};

// --- ngspice subprocess adapter ---------------------------------------------

class TemplateError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// `{{name}}` tokens in order of appearance (duplicates kept).
std::vector<std::string> template_placeholders(std::string_view tmpl);

/// Shortest round-trip scientific notation with a bare exponent: 12.5 -> "1.25e1".
std::string format_spice_number(double v);

struct RenderResult {
    std::string text;
    std::vector<std::string> warnings;
};

/// Substitutes every `{{param}}`. Unknown placeholders throw TemplateError
/// listing them; parameters the template never uses only produce warnings.
RenderResult render_netlist(std::string_view tmpl, const DesignSpace& space, const DesignPoint& point);

/// Reads `<name> = <value>` lines for bw, gain, pm, sr, idc from ngspice output.
/// A missing or failed measurement yields the infeasible marker. Never throws.
SimOutcome parse_measurements(std::string_view output);

struct NgspiceConfig {
    std::filesystem::path netlist_template;
    std::string ngspice_bin = "ngspice";
    std::filesystem::path work_dir;  // empty: system temp directory
    std::chrono::milliseconds timeout{30000};
};

/// Renders the template per evaluation into its own subdirectory and runs
/// `ngspice -b`. The directory is removed on success and kept on failure.
class NgspiceSimulator final : public Simulator {
public:
    /// Validates the template against `space` before any launch; throws
    /// TemplateError on unknown placeholders or a missing template file.
    NgspiceSimulator(DesignSpace space, NgspiceConfig cfg);
    const DesignSpace& space() const override { return space_; }
    SimOutcome simulate(const DesignPoint& point) const override;
    const NgspiceConfig& config() const { return cfg_; }

private:
    DesignSpace space_;
    NgspiceConfig cfg_;
    std::string template_;
    std::filesystem::path root_;
};

enum class Backend { Surrogate, Ngspice };

struct SimulatorConfig {
    Backend backend = Backend::Surrogate;
    NgspiceConfig ngspice;
    SurrogateConstants surrogate;
};

/// The ngspice backend needs an explicit design space.
std::unique_ptr<Simulator> make_simulator(const SimulatorConfig& cfg, const DesignSpace* space = nullptr);

}  // namespace opsizer
