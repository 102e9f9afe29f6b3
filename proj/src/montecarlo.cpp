#include "fblb/montecarlo.hpp"

#include "fblb/errors.hpp"
#include "fblb/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

namespace fblb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Runs fn(batch, first_sample, count) over all batches with up to `jobs` workers.
// Work is split by batch index only, so results cannot depend on scheduling.
template <class Fn>
void run_batches(long N, int jobs, Fn&& fn) {
    const long batches = (N + kBatchSize - 1) / kBatchSize;
    if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    jobs = static_cast<int>(std::min<long>(jobs, batches));
    std::atomic<long> next{0};
    auto worker = [&] {
        for (long b; (b = next.fetch_add(1)) < batches;) {
            const long first = b * kBatchSize;
            fn(b, first, std::min(kBatchSize, N - first));
        }
    };
    if (jobs <= 1) {
        worker();
        return;
    }
    std::vector<std::jthread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
}

// One sample: Σ_ℓ i_ℓ over L blocks, followed by one uniform for log U.
struct Draw {
    double sum_i;
    double log_u;
};

Draw draw(Engine& g, const ChannelConfig& cfg, double s) {
    double acc = 0.0;
    for (int l = 0; l < cfg.L; ++l) acc += info_density(cfg, s, sample_gamma_pair(g, cfg.T));
    return {acc, std::log(uniform_open(g))};
}

struct Threshold {
    double gamma;
    bool with_log_u;
};

// Number of samples with L·I − Σi − [log U] ≥ gamma, for every threshold.
std::vector<long> count_events(const ChannelConfig& cfg, double s, double I,
                               const std::vector<Threshold>& th, long N, std::uint64_t seed, int jobs) {
    const long batches = (N + kBatchSize - 1) / kBatchSize;
    std::vector<long> per_batch(batches * th.size(), 0);
    const double LI = cfg.L * I;
    run_batches(N, jobs, [&](long b, long, long count) {
        Engine g = make_stream(seed, static_cast<std::uint64_t>(b));
        long* c = per_batch.data() + b * th.size();
        for (long k = 0; k < count; ++k) {
            const Draw d = draw(g, cfg, s);
            const double deficit = LI - d.sum_i;
            for (std::size_t j = 0; j < th.size(); ++j)
                if (deficit - (th[j].with_log_u ? d.log_u : 0.0) >= th[j].gamma) ++c[j];
        }
    });
    std::vector<long> total(th.size(), 0);
    for (long b = 0; b < batches; ++b)
        for (std::size_t j = 0; j < th.size(); ++j) total[j] += per_batch[b * th.size() + j];
    return total;
}

McEstimate estimate(long hits, long N, std::uint64_t seed) {
    const double p = static_cast<double>(hits) / N;
    return {p, std::sqrt(p * (1.0 - p) / N), N, seed};
}

void check_n(long N) {
    if (N < 10000) throw ContractViolation("Monte-Carlo estimates need N >= 10^4 samples");
}

double converse_gamma(const ChannelConfig& cfg, double s, double J, double log_xi) {
    return s * cfg.L * J - s * log_xi;
}

}  // namespace

McEstimate tail_prob(const ChannelConfig& cfg, double s, double gamma, bool with_log_u, long N,
                     std::uint64_t seed, int jobs, CgfEvaluator& ev) {
    cfg.validate();
    check_n(N);
    const double I = ev.stats(cfg, s).I;
    return estimate(count_events(cfg, s, I, {{gamma, with_log_u}}, N, seed, jobs)[0], N, seed);
}

McEstimate rcus_mc(const ChannelConfig& cfg, double s, double R, long N, std::uint64_t seed, int jobs,
                   CgfEvaluator& ev) {
    if (!(s > 0.0) || !(R >= 0.0)) throw DomainError("rcus_mc: requires s > 0 and R >= 0");
    const double I = ev.stats(cfg, s).I;
    return tail_prob(cfg, s, cfg.L * I - static_cast<double>(cfg.n()) * R, true, N, seed, jobs, ev);
}

std::vector<double> default_xi_offsets() {
    return {-6.0, -4.0, -3.0, -2.0, -1.5, -1.0, -0.5, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0};
}

McEstimate mc_bound_mc(const ChannelConfig& cfg, double s, double R, std::vector<double> ladder, long N,
                       std::uint64_t seed, int jobs, std::optional<double> tau, CgfEvaluator& ev) {
    cfg.validate();
    check_n(N);
    const InfoDensityStats st = ev.stats(cfg, s);
    if (tau) ladder.push_back(cfg.L * (st.J - ev.bundle(cfg, {s, *tau}).psi1 / s));
    if (ladder.empty()) throw ContractViolation("mc_bound_mc: the log xi ladder is empty");

    std::vector<Threshold> th;
    for (double lx : ladder) th.push_back({converse_gamma(cfg, s, st.J, lx), false});
    const auto hits = count_events(cfg, s, st.I, th, N, seed, jobs);

    McEstimate best{0.0, 0.0, N, seed, ladder.front()};
    double best_val = -kInf;
    for (std::size_t j = 0; j < ladder.size(); ++j) {
        const McEstimate e = estimate(hits[j], N, seed);
        const double v = e.value - std::exp(ladder[j] - static_cast<double>(cfg.n()) * R);
        if (v > best_val) {
            best_val = v;
            best = {std::max(v, 0.0), e.std_err, N, seed, ladder[j]};
        }
    }
    return best;
}

SampleBank::SampleBank(const ChannelConfig& cfg, double s, long N, std::uint64_t seed, int jobs,
                       CgfEvaluator& ev)
    : cfg_(cfg), s_(s), seed_(seed), deficit_(N), log_u_(N) {
    cfg.validate();
    check_n(N);
    const InfoDensityStats st = ev.stats(cfg, s);
    I_ = st.I;
    J_ = st.J;
    const double LI = cfg.L * I_;
    run_batches(N, jobs, [&](long b, long first, long count) {
        Engine g = make_stream(seed, static_cast<std::uint64_t>(b));
        for (long k = 0; k < count; ++k) {
            const Draw d = draw(g, cfg_, s_);
            deficit_[first + k] = LI - d.sum_i;
            log_u_[first + k] = d.log_u;
        }
    });
}

McEstimate SampleBank::rcus(double R) const {
    const double gamma = cfg_.L * I_ - static_cast<double>(cfg_.n()) * R;
    long hits = 0;
    for (std::size_t k = 0; k < deficit_.size(); ++k)
        if (deficit_[k] - log_u_[k] >= gamma) ++hits;
    return estimate(hits, size(), seed_);
}

McEstimate SampleBank::converse(double R, const std::vector<double>& ladder) const {
    if (ladder.empty()) throw ContractViolation("SampleBank::converse: the log xi ladder is empty");
    McEstimate best{0.0, 0.0, size(), seed_, ladder.front()};
    double best_val = -kInf;
    for (double lx : ladder) {
        const double gamma = converse_gamma(cfg_, s_, J_, lx);
        const long hits = std::count_if(deficit_.begin(), deficit_.end(), [&](double d) { return d >= gamma; });
        const McEstimate e = estimate(hits, size(), seed_);
        const double v = e.value - std::exp(lx - static_cast<double>(cfg_.n()) * R);
        if (v > best_val) {
            best_val = v;
            best = {std::max(v, 0.0), e.std_err, size(), seed_, lx};
        }
    }
    return best;
}

double SampleBank::rcus_rate_at_eps(double eps) const {
    // The event for sample k holds exactly when R ≥ R_k.
    std::vector<double> rk(deficit_.size());
    const double n = static_cast<double>(cfg_.n());
    for (std::size_t k = 0; k < rk.size(); ++k) rk[k] = (cfg_.L * I_ - deficit_[k] + log_u_[k]) / n;
    const auto m = static_cast<std::size_t>(std::floor(eps * size()));
    if (m >= rk.size()) return kInf;
    // At R = R_(m) already m+1 events hold; the admissible rates end just below
    // it, so take the middle of the gap to the next-lower order statistic.
    std::nth_element(rk.begin(), rk.begin() + static_cast<long>(m), rk.end());
    const double hi = rk[m];
    const double lo = m > 0 ? *std::max_element(rk.begin(), rk.begin() + static_cast<long>(m))
                            : hi - 1e-6 * std::max(1.0, std::abs(hi));
    return std::max(0.5 * (lo + hi), 0.0);
}

double SampleBank::converse_rate_at_eps(double eps, const std::vector<double>& ladder) const {
    double best = kInf;
    for (double lx : ladder) {
        const double gamma = converse_gamma(cfg_, s_, J_, lx);
        const double p = static_cast<double>(std::count_if(deficit_.begin(), deficit_.end(),
                                                           [&](double d) { return d >= gamma; })) / size();
        if (p > eps) best = std::min(best, (lx - std::log(p - eps)) / static_cast<double>(cfg_.n()));
    }
    return best < kInf ? std::max(best, 0.0) : kInf;
}

}  // namespace fblb
