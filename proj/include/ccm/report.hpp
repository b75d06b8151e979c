#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "ccm/dataset.hpp"
#include "ccm/estimators.hpp"
#include "ccm/inference.hpp"
#include "ccm/least_squares.hpp"
#include "ccm/simulate.hpp"

namespace ccm {

enum class InteractionChoice { off, on, auto_detect };
enum class CiMethod { percentile, delta };

std::string to_string(InteractionChoice c);
std::string to_string(CiMethod m);

struct EstimateOptions {
    std::string input_file;          // echo only
    ColumnMap columns;               // echo only
    char delimiter = ',';
    double alpha = 0.05;
    int b_reps = 2000;
    std::uint64_t seed = 0;
    InteractionChoice interaction = InteractionChoice::auto_detect;
    bool stratified = false;
    CiMethod ci_method = CiMethod::percentile;
    bool force = false;
    TestMethod test_method = TestMethod::wald_bootstrap;
};

// one ratio estimand as it appears in a report; unavailable estimates keep
// their key in the output with a reason instead of numbers
struct ReportedEstimate {
    EstimandId id{};
    bool available = false;
    std::string reason;
    double simple_value = 0.0;
    std::optional<double> adjusted_value;
    double numerator = 0.0;
    double denominator = 0.0;
    std::optional<Interval> ci;
    double ci_alpha = 0.0;
    std::string ci_method;           // "percentile" | "delta"
    std::string ci_reason;           // set when ci is absent
};

struct ReportedEffect {
    std::string label;
    double value = 0.0;
    bool confounding_sensitive = false;
};

struct AnatomyCall {
    bool available = false;
    std::string reason;              // set when unavailable
    AnatomyLabel label = AnatomyLabel::not_applicable;
    std::string basis;               // how the three inputs were resolved
};

struct RunReport {
    EstimateOptions options;
    ValidationReport validation;
    int n = 0;
    bool interactions_used = false;
    std::string interaction_decision;
    std::optional<TestResult> interaction_test;
    FitBundle fits;
    GateResult gate_estimand1;
    GateResult gate_estimand2;
    ReportedEstimate estimand1;
    ReportedEstimate estimand2;
    std::vector<ReportedEffect> effects;
    bool diagnostic_available = false;
    std::string diagnostic_reason;   // set when unavailable or not applicable
    std::optional<DiagnosticResult> diagnostic;
    AnatomyCall anatomy;
    std::vector<std::string> warnings;
};

struct DiagnoseReport {
    EstimateOptions options;
    ValidationReport validation;
    int n = 0;
    bool interactions_used = false;
    std::string interaction_decision;
    std::optional<TestResult> interaction_test;
    GateResult gate_estimand1;
    GateResult gate_estimand2;
    bool diagnostic_available = false;
    std::string diagnostic_reason;
    std::optional<DiagnosticResult> diagnostic;
    std::vector<std::string> warnings;
};

// full estimation workflow: validate, settle the outcome-model form, gate both
// ratio denominators, estimate with finite-sample adjustment and CIs, classify.
// throws GateError when a gate fails without force, SingularModelError when a
// required model cannot be fit.
RunReport run_estimate(const Dataset& d, const EstimateOptions& opt);

// diagnostics only: validation, interaction test, both gates, conservatism check
DiagnoseReport run_diagnose(const Dataset& d, const EstimateOptions& opt);

nlohmann::ordered_json to_json(const RunReport& r);
nlohmann::ordered_json to_json(const DiagnoseReport& r);
nlohmann::ordered_json to_json(const McSummary& s);

std::string render_text(const RunReport& r);
std::string render_text(const DiagnoseReport& r);

// config-file schema for simulation studies; missing fields take the standard
// no-interaction preset defaults, unknown or ill-typed fields raise SchemaError
// with the offending field path
SimulationConfig parse_simulation_config(const nlohmann::json& j);

}  // namespace ccm
