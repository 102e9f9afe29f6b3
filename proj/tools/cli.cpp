#include "cli.hpp"

#include "fblb/asymptotics.hpp"
#include "fblb/errors.hpp"
#include "fblb/special_functions.hpp"

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#ifndef FBLB_DEFAULTS_FILE
#define FBLB_DEFAULTS_FILE "config/defaults.json"
#endif

namespace fblb::cli {

using json = nlohmann::ordered_json;

Defaults builtin_defaults() { return {}; }

Defaults defaults_from_json(const json& j) {
    Defaults d;
    auto get = [](const json& o, const char* key, auto& dst) {
        if (o.is_object() && o.contains(key)) dst = o.at(key).get<std::decay_t<decltype(dst)>>();
    };
    get(j, "version", d.version);
    if (j.contains("quadrature")) {
        const json& q = j["quadrature"];
        get(q, "n1", d.quad.n1);
        get(q, "n2", d.quad.n2);
        get(q, "tol", d.quad.tol);
    }
    get(j, "tau_margin", d.tau_margin);
    if (j.contains("optimizer")) {
        const json& o = j["optimizer"];
        get(o, "s_grid", d.opt.s_grid);
        get(o, "s_min", d.opt.s_min);
        get(o, "s_max", d.opt.s_max);
        get(o, "rho_min", d.opt.rho_min);
        get(o, "rho_max", d.opt.rho_max);
        get(o, "delta", d.opt.delta);
        get(o, "tau_grid", d.opt.tau_grid);
    }
    if (j.contains("montecarlo")) {
        const json& m = j["montecarlo"];
        get(m, "samples", d.mc.samples);
        get(m, "seed", d.mc.seed);
        get(m, "xi_offsets", d.mc.xi_offsets);
    }
    get(j, "jobs", d.jobs);
    if (j.contains("kinds")) {
        d.kinds.clear();
        for (const auto& k : j["kinds"]) {
            const auto kind = parse_kind(k.get<std::string>());
            if (!kind) throw ContractViolation("defaults file: unknown bound kind " + k.get<std::string>());
            d.kinds.push_back(*kind);
        }
    }
    if (j.contains("bench")) {
        const json& b = j["bench"];
        get(b, "T", d.bench.T);
        get(b, "snr_db", d.bench.snr_db);
        get(b, "eps", d.bench.eps);
        get(b, "L_small", d.bench.L_small);
        get(b, "L_large", d.bench.L_large);
        get(b, "repeats", d.bench.repeats);
    }
    return d;
}

Defaults load_defaults(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot open defaults file " + path);
    return defaults_from_json(json::parse(in));
}

std::string default_defaults_path() { return FBLB_DEFAULTS_FILE; }

namespace {

ChannelConfig channel_for(const Request& r, double axis) {
    const bool on = r.axis.has_value();
    int L = r.L.value_or(0), T = r.T.value_or(0);
    double db = r.snr_db.value_or(kNaN);
    if (on && *r.axis == Axis::L) L = static_cast<int>(std::lround(axis));
    if (on && *r.axis == Axis::Snr) db = axis;
    if (r.n) {
        if (r.T && !(on && *r.axis == Axis::L) && !r.L) L = static_cast<int>(*r.n / *r.T);
        else T = L > 0 ? static_cast<int>(*r.n / L) : 0;
    }
    if (std::isnan(db)) throw DomainError("missing SNR");
    return ChannelConfig::from_db(T, L, db);
}

Target target_for(const Request& r, double axis) {
    if (r.axis && *r.axis == Axis::Eps) return Target::eps(axis);
    if (r.axis && *r.axis == Axis::Rate) return Target::rate(axis);
    return r.eps ? Target::eps(*r.eps) : Target::rate(*r.rate);
}

EvalContext context_for(const Request& r, CgfEvaluator& ev, int mc_jobs) {
    EvalContext ctx;
    ctx.ev = &ev;
    ctx.opt = r.defaults.opt;
    ctx.opt.fast_s = r.fast_s;
    ctx.mc = r.defaults.mc;
    ctx.mc.samples = r.samples;
    ctx.mc.seed = r.seed;
    ctx.mc.jobs = mc_jobs;
    return ctx;
}

bool has_point(const Row& row) {
    return row.status == "ok" || row.status == "vacuous" || row.status == "unresolved";
}

bool is_mc(BoundKind k) { return k == BoundKind::RcusMc || k == BoundKind::McMc; }

Row eval_cell(const Request& r, BoundKind kind, double axis, const EvalContext& ctx) {
    Row row;
    row.axis = axis;
    row.kind = kind;
    try {
        const ChannelConfig cfg = channel_for(r, axis);
        const Target t = target_for(r, axis);
        row.point = t.kind == Target::Kind::Eps ? rate_at_eps(kind, cfg, t.value, ctx)
                                                : eps_at_rate(kind, cfg, t.value, ctx);
        if (row.point.vacuous) row.status = "vacuous";
        // no hits: the achievability estimate is below Monte-Carlo resolution, not a vacuous bound
        if (kind == BoundKind::RcusMc && row.point.eps == 0.0) row.status = "unresolved";
    } catch (const InfeasibleTarget& e) {
        row.status = "infeasible";
        row.message = e.what();
        row.feasible_lo = e.feasible_lo;
        row.feasible_hi = e.feasible_hi;
    } catch (const DomainError& e) {
        row.status = "domain";
        row.message = e.what();
    } catch (const ContractViolation& e) {
        row.status = "domain";
        row.message = e.what();
    } catch (const NumericError& e) {
        row.status = "numeric";
        row.message = e.what();
    }
    return row;
}

void fmt(std::string& out, double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

int exit_code_for(const std::vector<Row>& rows, bool any_ok_suffices) {
    bool ok = false, domain = false, infeasible = false, numeric = false;
    for (const Row& row : rows) {
        ok |= has_point(row);
        domain |= row.status == "domain";
        infeasible |= row.status == "infeasible";
        numeric |= row.status == "numeric";
    }
    if (any_ok_suffices && ok) return kOk;
    if (domain) return kUsage;
    if (infeasible) return kInfeasible;
    if (numeric) return kNumeric;
    return kOk;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

}  // namespace

std::vector<double> axis_values(const Request& r) {
    std::vector<double> v;
    if (!r.axis) return v;
    if (!(r.step > 0.0) || r.hi < r.lo) throw ContractViolation("--range needs a <= b and step > 0");
    const long count = static_cast<long>(std::floor((r.hi - r.lo) / r.step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) {
        // snap to the decimal grid so 0.3:0.6:0.1 yields 0.6, not 0.60000000000000009
        const double x = std::nearbyint((r.lo + r.step * k) * 1e12) / 1e12;
        switch (*r.axis) {
            case Axis::Eps: v.push_back(std::pow(10.0, x)); break;
            case Axis::L: {
                const long L = std::lround(x);
                if (L < 1) break;
                if (r.n && (*r.n % L != 0 || *r.n / L < 2)) break;
                if (v.empty() || v.back() != static_cast<double>(L)) v.push_back(static_cast<double>(L));
                break;
            }
            default: v.push_back(x);
        }
    }
    return v;
}

std::vector<Row> run_point(const Request& r) {
    CgfEvaluator ev(r.defaults.quad, r.defaults.tau_margin);
    const EvalContext ctx = context_for(r, ev, r.jobs);
    std::vector<Row> rows;
    for (BoundKind k : r.kinds) rows.push_back(eval_cell(r, k, kNaN, ctx));
    return rows;
}

std::vector<Row> run_sweep(const Request& r) {
    const auto axis = axis_values(r);
    CgfEvaluator ev(r.defaults.quad, r.defaults.tau_margin);
    const std::size_t n_tasks = axis.size() * r.kinds.size();
    const int workers = static_cast<int>(std::clamp<std::size_t>(r.jobs, 1, std::max<std::size_t>(n_tasks, 1)));
    // Parallelism goes to the sweep points; Monte-Carlo estimates do not depend on the split.
    const EvalContext base = context_for(r, ev, workers > 1 ? 1 : r.jobs);

    // Common random numbers: Monte-Carlo kinds keep the s found at the first axis value.
    std::vector<EvalContext> ctx(r.kinds.size(), base);
    std::vector<Row> rows(n_tasks);
    std::vector<bool> done(n_tasks, false);
    if (r.crn && !axis.empty()) {
        for (std::size_t k = 0; k < r.kinds.size(); ++k) {
            if (!is_mc(r.kinds[k])) continue;
            rows[k] = eval_cell(r, r.kinds[k], axis[0], base);
            done[k] = true;
            if (std::isfinite(rows[k].point.s)) ctx[k].mc.fixed_s = rows[k].point.s;
        }
    }

    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < n_tasks;) {
            if (done[i]) continue;
            const std::size_t a = i / r.kinds.size(), k = i % r.kinds.size();
            rows[i] = eval_cell(r, r.kinds[k], axis[a], ctx[k]);
        }
    };
    {
        std::vector<std::jthread> pool;
        for (int w = 1; w < workers; ++w) pool.emplace_back(work);
        work();
    }
    return rows;
}

std::string rows_csv(const std::vector<Row>& rows) {
    std::string out = kCsvHeader;
    out += '\n';
    for (const Row& row : rows) {
        const BoundPoint& p = row.point;
        const bool has = has_point(row);
        fmt(out, row.axis);
        out += ',';
        out += kind_name(row.kind);
        for (double v : {p.rate, p.eps, p.s, p.tau, p.log_xi, p.exponent, p.prefactor, p.std_err}) {
            out += ',';
            fmt(out, has ? v : kNaN);
        }
        out += ',';
        out += std::to_string(has ? p.n_samples : 0);
        out += ',';
        out += row.status;
        out += '\n';
    }
    return out;
}

json row_json(const Row& row) {
    json j;
    j["kind"] = std::string(kind_name(row.kind));
    j["status"] = row.status;
    if (std::isfinite(row.axis)) j["axis"] = row.axis;
    if (has_point(row)) {
        const BoundPoint& p = row.point;
        j["rate"] = num(p.rate);
        j["eps"] = num(p.eps);
        j["log_eps"] = num(p.log_eps);
        j["witness"] = {{"s", num(p.s)}, {"tau", num(p.tau)}, {"log_xi", num(p.log_xi)}};
        j["exponent"] = num(p.exponent);
        j["prefactor"] = num(p.prefactor);
        j["vacuous"] = p.vacuous;
        j["std_err"] = num(p.std_err);
        j["n_samples"] = p.n_samples;
    } else {
        j["message"] = row.message;
        if (row.status == "infeasible") j["feasible"] = {num(row.feasible_lo), num(row.feasible_hi)};
    }
    return j;
}

json point_json(const Request& r, const std::vector<Row>& rows) {
    json j;
    json ch;
    try {
        const ChannelConfig cfg = channel_for(r, kNaN);
        ch = {{"T", cfg.T}, {"L", cfg.L}, {"n", cfg.n()}, {"snr_db", *r.snr_db}, {"rho", cfg.rho}};
    } catch (const std::exception&) {
        ch = nullptr;
    }
    j["channel"] = ch;
    j["target"] = r.eps ? json{{"eps", *r.eps}} : json{{"rate", *r.rate}};
    j["montecarlo"] = {{"samples", r.samples}, {"seed", r.seed}};
    j["quadrature"] = {{"n1", r.defaults.quad.n1}, {"n2", r.defaults.quad.n2}};
    json res = json::array();
    for (const Row& row : rows) res.push_back(row_json(row));
    j["results"] = res;
    return j;
}

json bench_report(const Request& r) {
    const auto& b = r.defaults.bench;
    const int T = r.T.value_or(b.T);
    const double db = r.snr_db.value_or(b.snr_db);
    const double eps = r.eps.value_or(b.eps);
    json j;
    j["channel"] = {{"T", T}, {"snr_db", db}, {"eps", eps}};
    j["quadrature"] = {{"n1", r.defaults.quad.n1}, {"n2", r.defaults.quad.n2}};

    json sp = json::object(), mc = json::object();
    double t_sp[2] = {0, 0}, t_mc[2] = {0, 0};
    const int Ls[2] = {b.L_small, b.L_large};
    for (int i = 0; i < 2; ++i) {
        const ChannelConfig cfg = ChannelConfig::from_db(T, Ls[i], db);
        std::vector<double> times;
        std::size_t cache = 0;
        double rate = 0.0, s = 1.0;
        for (int rep = 0; rep < std::max(b.repeats, 1); ++rep) {
            CgfEvaluator ev(r.defaults.quad, r.defaults.tau_margin);
            EvalContext ctx = context_for(r, ev, r.jobs);
            const auto t0 = std::chrono::steady_clock::now();
            const BoundPoint p = rate_at_eps(BoundKind::RcusSp, cfg, eps, ctx);
            rate_at_eps(BoundKind::McSp, cfg, eps, ctx);
            times.push_back(seconds_since(t0));
            cache = ev.cache_size();
            rate = p.rate;
            s = p.s;
        }
        t_sp[i] = median(times);
        const std::string key = "L" + std::to_string(Ls[i]);
        sp[key] = {{"seconds", t_sp[i]}, {"cgf_evaluations", cache}, {"rate", rate}};

        const auto t0 = std::chrono::steady_clock::now();
        const McEstimate e = rcus_mc(cfg, s, rate, r.samples, r.seed, r.jobs);
        t_mc[i] = seconds_since(t0);
        mc[key] = {{"seconds", t_mc[i]}, {"samples", r.samples}, {"eps", e.value}, {"std_err", e.std_err}};
    }
    sp["ratio"] = t_sp[1] / t_sp[0];
    mc["ratio"] = t_mc[1] / t_mc[0];
    mc["L_ratio"] = static_cast<double>(b.L_large) / b.L_small;
    j["saddlepoint"] = sp;
    j["montecarlo"] = mc;
    return j;
}

json selftest_report() {
    const auto t0 = std::chrono::steady_clock::now();
    json checks = json::array();
    bool all = true;
    auto record = [&](const std::string& name, bool ok, const std::string& detail) {
        all = all && ok;
        checks.push_back({{"name", name}, {"passed", ok}, {"detail", detail}});
    };
    auto guarded = [&](const std::string& name, const std::function<std::string(bool&)>& body) {
        bool ok = true;
        std::string detail;
        try {
            detail = body(ok);
        } catch (const std::exception& e) {
            ok = false;
            detail = std::string("exception: ") + e.what();
        }
        record(name, ok, detail);
    };
    auto show = [](double v) {
        std::ostringstream os;
        os.precision(6);
        os << v;
        return os.str();
    };

    guarded("q_inv_round_trip", [&](bool& ok) {
        double worst = 0.0;
        for (double e : {1e-300, 1e-100, 1e-12, 1e-5, 0.01, 0.3, 0.5, 0.9, 0.999}) {
            worst = std::max(worst, std::abs(q_func(q_inv(e)) / e - 1.0));
        }
        ok = worst < 1e-10;
        return "max relative error " + show(worst);
    });

    guarded("inc_gamma_reference", [&](bool& ok) {
        double worst = 0.0;
        for (double a : {0.5, 1.0, 3.0, 11.0, 40.0})
            for (double x : {0.01, 0.7, 5.0, 12.0, 60.0}) {
                const double ref = boost::math::gamma_p(a, x);
                worst = std::max(worst, std::abs(reg_lower_inc_gamma(a, x) / ref - 1.0));
            }
        ok = worst < 1e-10;
        return "max relative error vs reference " + show(worst);
    });

    const ChannelConfig cases[] = {{2, 1, 1.0}, {12, 1, db_to_linear(6.0)}, {12, 1, 100.0}};

    guarded("mu_one", [&](bool& ok) {
        double worst = 0.0;
        for (const auto& cfg : cases) worst = std::max(worst, std::abs(mu_factor(cfg, 1.0) - 1.0));
        ok = worst < 1e-6;
        return "max |mu(1) - 1| = " + show(worst);
    });

    guarded("cgf_origin", [&](bool& ok) {
        double worst = 0.0;
        for (const auto& cfg : cases)
            for (double s : {0.5, 1.0}) {
                const CgfBundle b = cgf_bundle(cfg, {s, 0.0});
                worst = std::max({worst, std::abs(b.psi), std::abs(b.psi1)});
            }
        ok = worst < 1e-10;
        return "max |psi(0)|, |psi'(0)| = " + show(worst);
    });

    guarded("cgf_derivatives", [&](bool& ok) {
        double worst = 0.0;
        for (const auto& cfg : cases) {
            const double s = 0.8, tau = 0.4 * tau_domain(cfg, s).hi;
            auto psi = [&](double t) { return cgf_bundle(cfg, {s, t}).psi; };
            const CgfBundle b = cgf_bundle(cfg, {s, tau});
            const double h = 1e-3 * std::max(tau, 1.0);
            const double d1 = (psi(tau + h) - psi(tau - h)) / (2 * h);
            const double d2 = (psi(tau + h) - 2 * b.psi + psi(tau - h)) / (h * h);
            worst = std::max({worst, std::abs(d1 / b.psi1 - 1.0), std::abs(d2 / b.psi2 - 1.0)});
        }
        ok = worst < 1e-4;
        return "max relative finite-difference mismatch " + show(worst);
    });

    guarded("tau_domain_edges", [&](bool& ok) {
        std::string detail = "ok";
        for (const auto& cfg : cases) {
            const double s = 0.7;
            const double expect = std::min((1.0 + cfg.T * cfg.rho) / (s * cfg.T * cfg.rho), cfg.T / (cfg.T - 1.0));
            const TauInterval d = tau_domain(cfg, s);
            if (d.lo != 0.0 || std::abs(d.hi / expect - 1.0) > 1e-12) {
                ok = false;
                detail = "tau_max mismatch at T=" + std::to_string(cfg.T);
            }
            bool threw = false;
            try {
                cgf_bundle(cfg, {s, 1.001 * d.hi});
            } catch (const DomainError&) {
                threw = true;
            }
            if (!threw) {
                ok = false;
                detail = "tau beyond tau_max accepted";
            }
            const CgfBundle edge = cgf_bundle(cfg, {s, d.capped(kDefaultTauMargin)});
            if (!std::isfinite(edge.psi) || !(edge.psi2 > 0.0)) {
                ok = false;
                detail = "non-finite CGF at the capped edge";
            }
        }
        return detail;
    });

    json j;
    j["passed"] = all;
    j["checks"] = checks;
    j["seconds"] = seconds_since(t0);
    return j;
}

namespace {

std::optional<Axis> parse_axis(const std::string& s) {
    if (s == "L") return Axis::L;
    if (s == "eps") return Axis::Eps;
    if (s == "snr") return Axis::Snr;
    if (s == "rate") return Axis::Rate;
    return std::nullopt;
}

struct Raw {
    std::optional<int> T, L, n;
    std::optional<double> snr_db, eps, rate;
    std::vector<std::string> kinds;
    bool kinds_given = false;
    std::string sweep, range;
    std::optional<long> samples;
    std::optional<std::uint64_t> seed;
    std::optional<int> jobs;
    std::string format, out, defaults;
    bool fast_s = false, crn = false;
    double fault = 0.0;
};

void add_channel_options(CLI::App* sc, Raw& raw) {
    sc->add_option("--T", raw.T, "coherence interval length")->envname("FBLB_T");
    sc->add_option("--L", raw.L, "number of coherence intervals")->envname("FBLB_L");
    sc->add_option("--n", raw.n, "blocklength n = T L")->envname("FBLB_N");
    sc->add_option("--snr-db", raw.snr_db, "average SNR in dB")->envname("FBLB_SNR_DB");
    auto* eps = sc->add_option("--eps", raw.eps, "target error probability")->envname("FBLB_EPS");
    auto* rate = sc->add_option("--rate", raw.rate, "target rate in nats per channel use")->envname("FBLB_RATE");
    eps->excludes(rate);
}

void add_run_options(CLI::App* sc, Raw& raw) {
    sc->add_option("--kinds", raw.kinds, "comma-separated bound kinds, or 'all'")
        ->delimiter(',')
        ->envname("FBLB_KINDS");
    sc->add_option("--samples", raw.samples, "Monte-Carlo samples")->envname("FBLB_SAMPLES");
    sc->add_option("--seed", raw.seed, "Monte-Carlo seed")->envname("FBLB_SEED");
    sc->add_option("--jobs", raw.jobs, "worker threads")->envname("FBLB_JOBS");
    sc->add_option("--format", raw.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}))
        ->envname("FBLB_FORMAT");
    sc->add_option("--out", raw.out, "write output to this file");
    sc->add_flag("--fast-s", raw.fast_s, "tie s = 1/(1+tau) in the achievability optimizer")->envname("FBLB_FAST_S");
    sc->add_option("--defaults", raw.defaults, "defaults file (JSON)")->envname("FBLB_DEFAULTS");
    sc->add_option("--inject-inc-gamma-fault", raw.fault)->group("");
}

Defaults resolve_defaults(const Raw& raw) {
    if (!raw.defaults.empty()) return load_defaults(raw.defaults);
    if (std::ifstream probe(default_defaults_path()); probe) return load_defaults(default_defaults_path());
    return builtin_defaults();
}

Request build_request(const Raw& raw, bool sweep) {
    Request r;
    r.defaults = resolve_defaults(raw);
    r.T = raw.T;
    r.L = raw.L;
    r.n = raw.n;
    r.snr_db = raw.snr_db;
    r.eps = raw.eps;
    r.rate = raw.rate;
    r.samples = raw.samples.value_or(r.defaults.mc.samples);
    r.seed = raw.seed.value_or(r.defaults.mc.seed);
    r.jobs = std::max(raw.jobs.value_or(r.defaults.jobs), 1);
    r.fast_s = raw.fast_s;
    r.crn = raw.crn;

    if (!raw.kinds_given) {
        r.kinds = r.defaults.kinds;
    } else {
        for (const std::string& k : raw.kinds) {
            if (k.empty()) continue;
            if (k == "all") {
                r.kinds = all_kinds();
                continue;
            }
            const auto kind = parse_kind(k);
            if (!kind) throw ContractViolation("unknown bound kind '" + k + "'");
            r.kinds.push_back(*kind);
        }
    }
    if (r.kinds.empty()) throw ContractViolation("the set of bound kinds is empty");

    if (sweep) {
        r.axis = parse_axis(raw.sweep);
        if (!r.axis) throw ContractViolation("--sweep must be one of L, eps, snr, rate");
        double a, b, st;
        char c1, c2;
        std::istringstream is(raw.range);
        if (!(is >> a >> c1 >> b >> c2 >> st) || c1 != ':' || c2 != ':' || !is.eof())
            throw ContractViolation("--range must look like a:b:step");
        r.lo = a;
        r.hi = b;
        r.step = st;
    }
    const bool axis_l = r.axis == Axis::L, axis_snr = r.axis == Axis::Snr;
    const bool axis_target = r.axis == Axis::Eps || r.axis == Axis::Rate;
    if (!axis_snr && !r.snr_db) throw ContractViolation("--snr-db is required");
    if (axis_target && (r.eps || r.rate)) throw ContractViolation("--eps/--rate conflict with the sweep axis");
    if (!axis_target && !r.eps && !r.rate) throw ContractViolation("one of --eps or --rate is required");
    if (axis_l) {
        if (r.L) throw ContractViolation("--L conflicts with an L sweep");
        if (!r.T == !r.n) throw ContractViolation("an L sweep needs exactly one of --T or --n");
    } else {
        const int given = (r.T ? 1 : 0) + (r.L ? 1 : 0) + (r.n ? 1 : 0);
        if (given != 2) throw ContractViolation("give exactly two of --T, --L, --n");
        if (r.n && r.T && *r.n % *r.T != 0) throw ContractViolation("--n must be a multiple of --T");
        if (r.n && r.L && *r.n % *r.L != 0) throw ContractViolation("--n must be a multiple of --L");
    }
    return r;
}

void emit(const Raw& raw, const std::string& text, std::ostream& out) {
    if (raw.out.empty()) {
        out << text;
        return;
    }
    std::ofstream f(raw.out, std::ios::binary);
    if (!f) throw ContractViolation("cannot write " + raw.out);
    f << text;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Finite-blocklength bounds for the noncoherent Rayleigh block-fading channel", "fblb"};
    app.require_subcommand(1);
    Raw raw;

    auto* point = app.add_subcommand("point", "evaluate each requested bound at one operating point");
    add_channel_options(point, raw);
    add_run_options(point, raw);

    auto* sweep = app.add_subcommand("sweep", "evaluate bounds along one axis and emit a table");
    add_channel_options(sweep, raw);
    add_run_options(sweep, raw);
    sweep->add_option("--sweep", raw.sweep, "axis: L, eps, snr or rate")->required()->envname("FBLB_SWEEP");
    sweep->add_option("--range", raw.range, "a:b:step (eps axis in log10 units)")->required()->envname("FBLB_RANGE");
    sweep->add_flag("--crn", raw.crn, "Monte-Carlo kinds keep the s of the first axis value");

    auto* bench = app.add_subcommand("bench", "time saddlepoint and Monte-Carlo evaluation at two values of L");
    add_channel_options(bench, raw);
    add_run_options(bench, raw);

    auto* self = app.add_subcommand("selftest", "run the fast invariant battery");
    self->add_option("--inject-inc-gamma-fault", raw.fault)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }
    for (auto* sc : {point, sweep, bench})
        if (sc->parsed()) raw.kinds_given = sc->get_option("--kinds")->count() > 0 || std::getenv("FBLB_KINDS");

    struct FaultGuard {
        explicit FaultGuard(double rel) { fault::set_inc_gamma_perturbation(rel); }
        ~FaultGuard() { fault::set_inc_gamma_perturbation(0.0); }
    } guard(raw.fault);

    try {
        if (self->parsed()) {
            const json rep = selftest_report();
            out << rep.dump(2) << '\n';
            if (!rep["passed"].get<bool>()) {
                for (const auto& c : rep["checks"])
                    if (!c["passed"].get<bool>()) err << "selftest failed: " << c["name"].get<std::string>() << '\n';
                return kSelftestFailed;
            }
            return kOk;
        }
        if (bench->parsed()) {
            Request r;
            r.defaults = resolve_defaults(raw);
            r.T = raw.T;
            r.snr_db = raw.snr_db;
            r.eps = raw.eps;
            r.samples = raw.samples.value_or(r.defaults.mc.samples);
            r.seed = raw.seed.value_or(r.defaults.mc.seed);
            r.jobs = std::max(raw.jobs.value_or(r.defaults.jobs), 1);
            emit(raw, bench_report(r).dump(2) + "\n", out);
            return kOk;
        }
        const bool is_sweep = sweep->parsed();
        const Request r = build_request(raw, is_sweep);
        const std::string format = raw.format.empty() ? (is_sweep ? "csv" : "json") : raw.format;
        const std::vector<Row> rows = is_sweep ? run_sweep(r) : run_point(r);
        if (format == "csv") {
            emit(raw, rows_csv(rows), out);
        } else if (is_sweep) {
            json arr = json::array();
            for (const Row& row : rows) arr.push_back(row_json(row));
            emit(raw, arr.dump(2) + "\n", out);
        } else {
            emit(raw, point_json(r, rows).dump(2) + "\n", out);
        }
        for (const Row& row : rows)
            if (row.status == "infeasible" || row.status == "domain" || row.status == "numeric")
                err << kind_name(row.kind) << ": " << row.status << ": " << row.message << '\n';
        return exit_code_for(rows, is_sweep);
    } catch (const ContractViolation& e) {
        err << "usage error: " << e.what() << '\n';
        out << json{{"error", {{"type", "usage"}, {"message", e.what()}}}}.dump() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        err << "usage error: " << e.what() << '\n';
        out << json{{"error", {{"type", "domain"}, {"message", e.what()}}}}.dump() << '\n';
        return kUsage;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return kNumeric;
    }
}

}  // namespace fblb::cli
