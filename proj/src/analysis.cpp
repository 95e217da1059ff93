/*
   Copyright 2026 The amswave Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "amswave/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "amswave/parallel.hpp"

namespace amswave {

Moments sample_moments(const std::vector<double>& values)
{
    Moments m;
    const std::size_t R = values.size();
    if (R == 0) return m;
    double sum = 0.0;
    for (double v : values) sum += v;
    m.mean = sum / static_cast<double>(R);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : values) {
        const double d = v - m.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    if (R > 1) {
        m.variance = m2 / static_cast<double>(R - 1);
        m.std_error = std::sqrt(m.variance / static_cast<double>(R));
    }
    m2 /= static_cast<double>(R);
    m3 /= static_cast<double>(R);
    m4 /= static_cast<double>(R);
    if (m2 > 0.0) {
        m.skewness = m3 / std::pow(m2, 1.5);
        m.excess_kurtosis = m4 / (m2 * m2) - 3.0;
    }
    return m;
}

bool EstimatorReport::all_passed() const
{
    return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return c.passed; });
}

EstimatorReport summarize(std::vector<double> values, std::size_t N, double h)
{
    const Moments m = sample_moments(values);
    EstimatorReport r;
    r.R = values.size();
    r.values = std::move(values);
    r.mean = m.mean;
    r.variance = m.variance;
    r.std_error = m.std_error;
    r.N = N;
    r.h = h;
    r.skewness = m.skewness;
    r.excess_kurtosis = m.excess_kurtosis;
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct NaiveChunk {
    std::size_t successes = 0;
    std::size_t censored = 0;
    double phi_sum = 0.0;
    double phi_sq = 0.0;
    double psi_sum = 0.0;
    double psi_sq = 0.0;
};

constexpr std::size_t naive_chunk = 1024;

} // namespace

NaiveReport naive_monte_carlo(const DiffusionModel& model, std::size_t M, std::uint64_t seed,
                              std::uint64_t replicate, const NaiveOptions& opts)
{
    if (M == 0) throw std::invalid_argument("naive_monte_carlo: M must be positive");
    model.validate();
    const std::size_t chunks = (M + naive_chunk - 1) / naive_chunk;
    std::vector<NaiveChunk> parts(chunks);
    parallel_for(chunks, opts.workers, [&](std::size_t c) {
        NaiveChunk& acc = parts[c];
        const std::size_t end = std::min(M, (c + 1) * naive_chunk);
        for (std::size_t i = c * naive_chunk; i < end; ++i) {
            RngStream rng = make_stream(seed, replicate, Purpose::Naive, i);
            const Point x0 = model.sample_initial(rng);
            const Trajectory path = simulate_path(model, x0, rng);
            if (path.status() == PathStatus::Censored) {
                if (opts.censor_policy == CensorPolicy::Abort) {
                    throw CensoredError("naive_monte_carlo: path censored after max_steps");
                }
                ++acc.censored;
                continue;
            }
            if (path.status() != PathStatus::ReachedTop) continue;
            ++acc.successes;
            const double f = opts.phi ? opts.phi(path.back()) : 1.0;
            acc.phi_sum += f;
            acc.phi_sq += f * f;
            if (opts.psi) {
                const double g = opts.psi(path);
                acc.psi_sum += g;
                acc.psi_sq += g * g;
            }
        }
    });
    NaiveChunk total;
    for (const NaiveChunk& c : parts) {
        total.successes += c.successes;
        total.censored += c.censored;
        total.phi_sum += c.phi_sum;
        total.phi_sq += c.phi_sq;
        total.psi_sum += c.psi_sum;
        total.psi_sq += c.psi_sq;
    }

    NaiveReport r;
    const double Md = static_cast<double>(M);
    r.M = M;
    r.successes = total.successes;
    r.censored = total.censored;
    r.p = static_cast<double>(total.successes) / Md;
    r.indicator_variance = r.p * (1.0 - r.p);
    r.p_std_error = std::sqrt(r.indicator_variance / Md);
    r.gamma = total.phi_sum / Md;
    const double gvar = std::max(0.0, total.phi_sq / Md - r.gamma * r.gamma);
    r.gamma_std_error = std::sqrt(gvar / Md);
    if (total.successes > 0) {
        const double S = static_cast<double>(total.successes);
        r.eta = total.phi_sum / S;
        r.eta_std_error = S > 1 ? std::sqrt(std::max(0.0, total.phi_sq / S - *r.eta * *r.eta) / (S - 1)) : 0.0;
        if (opts.psi) {
            r.path_eta = total.psi_sum / S;
            r.path_eta_std_error =
                S > 1 ? std::sqrt(std::max(0.0, total.psi_sq / S - *r.path_eta * *r.path_eta) / (S - 1)) : 0.0;
        }
    }
    return r;
}

std::pair<double, double> variance_bounds(double p)
{
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("variance_bounds: p must lie in (0, 1)");
    return {-p * p * std::log(p), 2.0 * p * (1.0 - p)};
}

// ---------------------------------------------------------------------------

namespace {

/// -2 int f p dp over the nodes, trapezoid in p; f is read through `get`.
template <class Get>
double stieltjes(const std::vector<QuadratureNode>& nodes, Get get)
{
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
        const double a = get(nodes[k]) * nodes[k].p_hat;
        const double b = get(nodes[k + 1]) * nodes[k + 1].p_hat;
        acc += 0.5 * (a + b) * (nodes[k + 1].p_hat - nodes[k].p_hat);
    }
    return -2.0 * acc;
}

void assemble(VarianceDecomposition& d)
{
    const double p1 = d.p1;
    const double logp = p1 > 0.0 ? std::log(p1) : 0.0;
    d.term_V_eta1 = p1 * p1 * d.V_eta1_phi;
    d.term_log = -p1 * p1 * logp * d.eta1_phi * d.eta1_phi;
    d.term_integral = stieltjes(d.nodes, [](const QuadratureNode& n) { return n.V_q; });
    d.total = d.term_V_eta1 + d.term_log + d.term_integral;
    d.centered_total = d.term_V_eta1 + stieltjes(d.nodes, [](const QuadratureNode& n) { return n.V_q_centered; });
    d.unit_total = -p1 * p1 * logp + stieltjes(d.nodes, [](const QuadratureNode& n) { return n.V_q_one; });
}

struct InnerStats {
    double mean = 0.0;
    double var = 0.0;  // unbiased sample variance of the inner values
};

InnerStats inner_stats(const std::vector<double>& v)
{
    InnerStats s;
    const double n = static_cast<double>(v.size());
    for (double x : v) s.mean += x;
    s.mean /= n;
    for (double x : v) s.var += (x - s.mean) * (x - s.mean);
    s.var = v.size() > 1 ? s.var / (n - 1.0) : 0.0;
    return s;
}

/// Debiased variance over cloud points of q estimates: outer variance minus
/// the mean variance of one inner average.
struct NestedVariance {
    double raw = 0.0;
    double noise = 0.0;
    double mean = 0.0;
    double mean_se = 0.0;
    double value() const { return raw - noise; }
};

NestedVariance nested_variance(const std::vector<InnerStats>& points, double m)
{
    NestedVariance nv;
    const double C = static_cast<double>(points.size());
    for (const InnerStats& s : points) {
        nv.mean += s.mean;
        nv.noise += s.var / m;
    }
    nv.mean /= C;
    nv.noise /= C;
    for (const InnerStats& s : points) nv.raw += (s.mean - nv.mean) * (s.mean - nv.mean);
    nv.raw = points.size() > 1 ? nv.raw / (C - 1.0) : 0.0;
    nv.mean_se = std::sqrt(nv.raw / C);
    return nv;
}

} // namespace

VarianceDecomposition variance_formula_quadrature(const DiffusionModel& model, const StateFunction& phi,
                                                  const std::vector<double>& level_nodes,
                                                  const QuadratureBudgets& budgets, std::uint64_t seed,
                                                  std::size_t workers)
{
    model.validate();
    if (level_nodes.size() < 3) throw std::invalid_argument("variance quadrature needs K >= 2");
    if (level_nodes.front() != 0.0 || level_nodes.back() != 1.0) {
        throw std::invalid_argument("variance quadrature nodes must run from 0 to 1");
    }
    for (std::size_t k = 1; k < level_nodes.size(); ++k) {
        if (!(level_nodes[k] > level_nodes[k - 1])) {
            throw std::invalid_argument("variance quadrature nodes must be strictly increasing");
        }
    }
    if (budgets.M_p == 0 || budgets.M_q < 2 || budgets.cloud_cap < 2) {
        throw std::invalid_argument("variance quadrature budgets too small");
    }

    // Outer paths, shared by every node.
    std::vector<Trajectory> outer(budgets.M_p);
    parallel_for(budgets.M_p, workers, [&](std::size_t i) {
        RngStream rng = make_stream(seed, 0, Purpose::Quadrature, i);
        const Point x0 = model.sample_initial(rng);
        outer[i] = simulate_path(model, x0, rng);
        if (outer[i].status() == PathStatus::Censored) {
            throw CensoredError("variance quadrature: outer path censored after max_steps");
        }
    });

    const std::size_t K1 = level_nodes.size();
    std::vector<std::vector<Point>> clouds(K1);
    std::vector<std::size_t> survivors(K1, 0);
    for (std::size_t k = 0; k < K1; ++k) {
        for (const Trajectory& path : outer) {
            const auto e = entrance_index(path, level_nodes[k]);
            if (!e) continue;
            ++survivors[k];
            if (clouds[k].size() < budgets.cloud_cap || k + 1 == K1) clouds[k].push_back(path.state_point(*e));
        }
        if (survivors[k] == 0) {
            std::ostringstream msg;
            msg << "variance quadrature: no outer path reaches level " << level_nodes[k]
                << "; use a coarser grid or a larger M_p";
            throw ModelError(msg.str());
        }
    }

    VarianceDecomposition d;
    const double Mp = static_cast<double>(budgets.M_p);
    d.p1 = static_cast<double>(survivors.back()) / Mp;
    {
        // The final cloud holds every success: phi is observed exactly there.
        std::vector<double> f;
        f.reserve(clouds.back().size());
        for (const Point& y : clouds.back()) f.push_back(phi(y));
        const Moments m = sample_moments(f);
        d.eta1_phi = m.mean;
        d.V_eta1_phi = m.variance;
        for (double v : f) d.sup_centered = std::max(d.sup_centered, std::abs(v - d.eta1_phi));
    }

    const double Mq = static_cast<double>(budgets.M_q);
    for (std::size_t k = 0; k < K1; ++k) {
        QuadratureNode node;
        node.t = level_nodes[k];
        node.p_hat = static_cast<double>(survivors[k]) / Mp;
        node.survivors = survivors[k];
        std::vector<Point> cloud = clouds[k];
        if (cloud.size() > budgets.cloud_cap) cloud.resize(budgets.cloud_cap);
        node.cloud = cloud.size();

        std::vector<InnerStats> sq(cloud.size()), sone(cloud.size()), scen(cloud.size());
        parallel_for(cloud.size(), workers, [&](std::size_t c) {
            const Point& y = cloud[c];
            std::vector<double> a(budgets.M_q), b(budgets.M_q), z(budgets.M_q);
            if (model.level(y) > model.top_level) {
                std::fill(a.begin(), a.end(), phi(y));
                std::fill(b.begin(), b.end(), 1.0);
            } else {
                const RngStream base = make_stream(seed, 1 + k, Purpose::Committor, c);
                for (std::size_t s = 0; s < budgets.M_q; ++s) {
                    RngStream rng = base.split(s);
                    const Trajectory path = simulate_path(model, y, rng);
                    if (path.status() == PathStatus::Censored) {
                        throw CensoredError("variance quadrature: inner path censored after max_steps");
                    }
                    const bool hit = path.status() == PathStatus::ReachedTop;
                    a[s] = hit ? phi(path.back()) : 0.0;
                    b[s] = hit ? 1.0 : 0.0;
                }
            }
            for (std::size_t s = 0; s < budgets.M_q; ++s) z[s] = a[s] - d.eta1_phi * b[s];
            sq[c] = inner_stats(a);
            sone[c] = inner_stats(b);
            scen[c] = inner_stats(z);
        });
        const NestedVariance vq = nested_variance(sq, Mq);
        const NestedVariance vone = nested_variance(sone, Mq);
        const NestedVariance vcen = nested_variance(scen, Mq);
        node.V_q = vq.value();
        node.V_q_raw = vq.raw;
        node.inner_noise = vq.noise;
        node.V_q_one = vone.value();
        node.eta_q_one = vone.mean;
        node.V_q_centered = vcen.value();
        node.eta_q_centered = vcen.mean;
        node.eta_q_centered_se = vcen.mean_se;
        const double r = std::min(1.0, d.p1 / node.p_hat);
        node.bernoulli_bound = r * (1.0 - r);
        const double C = static_cast<double>(node.cloud);
        node.bernoulli_allowance = 3.0 * (std::sqrt(2.0 / std::max(1.0, C - 1.0)) * vone.raw + vone.noise);
        node.bernoulli_ok = node.V_q_one <= node.bernoulli_bound + node.bernoulli_allowance;
        d.nodes.push_back(node);
    }
    assemble(d);
    return d;
}

VarianceDecomposition coarsen(const VarianceDecomposition& fine, std::size_t stride)
{
    if (stride == 0) throw std::invalid_argument("coarsen: stride must be positive");
    VarianceDecomposition out = fine;
    out.nodes.clear();
    for (std::size_t k = 0; k < fine.nodes.size(); k += stride) out.nodes.push_back(fine.nodes[k]);
    if (out.nodes.back().t != fine.nodes.back().t) out.nodes.push_back(fine.nodes.back());
    assemble(out);
    return out;
}

EtaVarianceReport eta_variance_formula(const VarianceDecomposition& decomp, double tolerance)
{
    if (!(decomp.p1 > 0.0)) throw std::invalid_argument("eta_variance_formula: p_1 must be positive");
    EtaVarianceReport r;
    const double p1 = decomp.p1;
    r.tolerance = tolerance;
    r.value = decomp.centered_total / (p1 * p1);
    r.lower = decomp.V_eta1_phi;
    r.upper = decomp.V_eta1_phi +
              decomp.sup_centered * decomp.sup_centered * (decomp.unit_total / (p1 * p1) - std::log(p1));
    const double slack = tolerance * std::max(std::abs(r.lower), std::abs(r.upper));
    r.inside = r.value >= r.lower - slack && r.value <= r.upper + slack;
    for (const QuadratureNode& n : decomp.nodes) {
        if (n.eta_q_centered_se > 0.0) {
            r.centering_max_z = std::max(r.centering_max_z, std::abs(n.eta_q_centered) / n.eta_q_centered_se);
        } else if (n.eta_q_centered != 0.0 && std::abs(n.eta_q_centered) > 1e-12) {
            r.centering_max_z = std::numeric_limits<double>::infinity();
        }
    }
    r.centering_ok = r.centering_max_z <= 3.0;
    return r;
}

// ---------------------------------------------------------------------------

CltReport clt_diagnostics(const std::vector<double>& p_values, std::size_t N, double p_ref)
{
    if (p_values.size() < 100) throw std::invalid_argument("clt_diagnostics: need at least 100 replicates");
    CltReport r;
    r.R = p_values.size();
    r.N = N;
    r.p_ref = p_ref;
    const double sN = std::sqrt(static_cast<double>(N));
    std::vector<double> scaled;
    scaled.reserve(r.R);
    for (double p : p_values) scaled.push_back(sN * p);
    const Moments m = sample_moments(scaled);
    r.mean = m.mean / sN;
    r.variance_about_mean = m.variance;
    for (double p : p_values) r.variance_about_ref += static_cast<double>(N) * (p - p_ref) * (p - p_ref);
    r.variance_about_ref /= static_cast<double>(r.R);
    double m4 = 0.0;
    for (double x : scaled) m4 += std::pow(x - m.mean, 4);
    m4 /= static_cast<double>(r.R);
    r.variance_std_error = std::sqrt(std::max(0.0, m4 - m.variance * m.variance) / static_cast<double>(r.R));
    r.skewness = m.skewness;
    r.excess_kurtosis = m.excess_kurtosis;
    r.skew_gate = 4.0 * std::sqrt(6.0 / static_cast<double>(r.R));
    r.kurt_gate = 4.0 * std::sqrt(24.0 / static_cast<double>(r.R));
    r.normal_ok = std::abs(r.skewness) < r.skew_gate && std::abs(r.excess_kurtosis) < r.kurt_gate;
    if (p_ref > 0.0 && p_ref < 1.0) {
        std::tie(r.lower, r.upper) = variance_bounds(p_ref);
        const double allowance = 3.0 * r.variance_std_error;
        r.in_bracket = r.variance_about_mean >= r.lower - allowance && r.variance_about_mean <= r.upper + allowance;
    }
    return r;
}

J1Report j1_scaling_check(const std::vector<double>& j1_values, std::size_t N, double p_ref)
{
    if (j1_values.size() < 100) throw std::invalid_argument("j1_scaling_check: need at least 100 replicates");
    if (!(p_ref > 0.0 && p_ref <= 1.0)) throw std::invalid_argument("j1_scaling_check: p_ref must lie in (0, 1]");
    const Moments m = sample_moments(j1_values);
    J1Report r;
    r.R = j1_values.size();
    r.N = N;
    r.mean = m.mean;
    r.expected = -static_cast<double>(N) * std::log(p_ref);
    r.relative_error = r.expected > 0.0 ? (r.mean - r.expected) / r.expected : r.mean;
    r.std_dev = std::sqrt(m.variance);
    r.dispersion = r.std_dev / std::sqrt(static_cast<double>(N));
    r.expected_dispersion = std::sqrt(-std::log(p_ref));
    return r;
}

L2Report l2_bound_check(const std::vector<double>& gamma_values, double gamma_ref, double phi_sup,
                        std::size_t N)
{
    if (gamma_values.size() < 100) throw std::invalid_argument("l2_bound_check: need at least 100 replicates");
    std::vector<double> sq;
    sq.reserve(gamma_values.size());
    for (double g : gamma_values) sq.push_back((g - gamma_ref) * (g - gamma_ref));
    const Moments m = sample_moments(sq);
    L2Report r;
    r.R = gamma_values.size();
    r.N = N;
    r.mse = m.mean;
    r.mse_std_error = m.std_error;
    r.bound = 6.0 * phi_sup * phi_sup / static_cast<double>(N);
    r.scaled = r.mse * static_cast<double>(N);
    r.passed = r.mse <= r.bound + 3.0 * r.mse_std_error;
    return r;
}

} // namespace amswave
