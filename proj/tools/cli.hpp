#pragma once

#include "fblb/bounds.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace fblb::cli {

enum ExitCode : int {
    kOk = 0,
    kSelftestFailed = 1,
    kInfeasible = 2,
    kUsage = 64,
    kNumeric = 70,
};

/// Tunables read from the versioned defaults file. Every value has a built-in
/// fallback equal to the shipped file.
struct Defaults {
    int version = 1;
    QuadratureSpec quad;
    double tau_margin = kDefaultTauMargin;
    OptimizerOptions opt;
    McOptions mc;
    int jobs = 1;
    std::vector<BoundKind> kinds{BoundKind::RcusSp, BoundKind::McSp, BoundKind::Na};
    struct Bench {
        int T = 12;
        double snr_db = 6.0;
        double eps = 1e-3;
        int L_small = 10;
        int L_large = 100;
        int repeats = 3;
    } bench;
};

Defaults builtin_defaults();
/// Missing keys keep their built-in values; unknown keys are ignored.
Defaults defaults_from_json(const nlohmann::ordered_json& j);
Defaults load_defaults(const std::string& path);
/// Path compiled into the binary, used when neither --defaults nor FBLB_DEFAULTS is given.
std::string default_defaults_path();

enum class Axis { L, Eps, Snr, Rate };

struct Request {
    std::vector<BoundKind> kinds;
    std::optional<int> T, L, n;
    std::optional<double> snr_db, eps, rate;
    std::optional<Axis> axis;
    double lo = 0.0, hi = 0.0, step = 1.0;
    long samples = 0;
    std::uint64_t seed = 1;
    int jobs = 1;
    bool fast_s = false;
    bool crn = false;
    Defaults defaults;
};

/// One evaluated (axis value, kind) cell. status is "ok", "vacuous", "unresolved"
/// (Monte-Carlo achievability with no hits), "infeasible", "domain" or "numeric".
/// point is only meaningful for the first three.
struct Row {
    double axis = 0.0;
    BoundKind kind = BoundKind::RcusSp;
    BoundPoint point;
    std::string status = "ok";
    std::string message;
    double feasible_lo = kNaN;
    double feasible_hi = kNaN;
};

inline const char* kCsvHeader = "axis,kind,rate,eps,s,tau,xi,exponent,prefactor,std_err,n_samples,status";

std::vector<double> axis_values(const Request& r);
std::vector<Row> run_point(const Request& r);
std::vector<Row> run_sweep(const Request& r);

std::string rows_csv(const std::vector<Row>& rows);
nlohmann::ordered_json row_json(const Row& row);
nlohmann::ordered_json point_json(const Request& r, const std::vector<Row>& rows);

nlohmann::ordered_json bench_report(const Request& r);

/// Fast invariant battery. The "passed" member summarizes "checks".
nlohmann::ordered_json selftest_report();

/// Full command line entry point; output and diagnostics go to the given streams.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fblb::cli
