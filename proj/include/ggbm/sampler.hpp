#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ggbm/model.hpp"
#include "ggbm/rng.hpp"

namespace ggbm::sampler {

// One-sided beta-stable draw S with Laplace transform exp(-s^beta), via the
// Kanter representation S = (a(U)/W)^((1-beta)/beta) computed in log space.
// beta = 1 returns exactly 1.
double sample_stable_oneside(double beta, rng::Xoshiro256& gen);
double sample_stable_oneside(double beta, const rng::SeedSpec& seed);

// tau = S^(-beta); E[exp(-s tau)] = E_beta(-s), density M_beta.
// beta = 1 returns exactly 1 and consumes no randomness.
double sample_mwright_tau(double beta, rng::Xoshiro256& gen);
double sample_mwright_tau(double beta, const rng::SeedSpec& seed);

// Exact-in-distribution scalar Gaussian path with covariance
// cov_kernel(alpha, t_i, t_j), by Cholesky factorization of the Gram matrix.
class CholeskyFbmSampler {
  public:
    static constexpr std::size_t kMaxGridPoints = 4096;

    CholeskyFbmSampler(double alpha, const TimeGrid& grid);
    ~CholeskyFbmSampler();
    CholeskyFbmSampler(CholeskyFbmSampler&&) noexcept;
    CholeskyFbmSampler& operator=(CholeskyFbmSampler&&) noexcept;

    std::vector<double> sample(rng::Xoshiro256& gen) const;
    const TimeGrid& grid() const { return grid_; }
    double applied_jitter() const { return jitter_; }

  private:
    struct Impl;
    TimeGrid grid_;
    std::unique_ptr<Impl> impl_;
    double jitter_ = 0.0;
};

// Same law in O(n log n) by circulant embedding of the stationary
// fractional-Gaussian-noise increments, cumulative-summed to a path.
class CirculantFgnSampler {
  public:
    CirculantFgnSampler(double alpha, const TimeGrid& grid);

    std::vector<double> sample(rng::Xoshiro256& gen) const;
    const TimeGrid& grid() const { return grid_; }
    // most negative embedding eigenvalue relative to the largest (>= -1e-9
    // required; small negatives are clipped to zero)
    double min_eigenvalue_ratio() const { return min_ratio_; }

  private:
    TimeGrid grid_;
    std::size_t embed_size_ = 0;
    std::vector<double> sqrt_eig_;
    double min_ratio_ = 0.0;
};

enum class FbmMethod { cholesky, circulant };

// One sampled trajectory: d coordinates on the grid, the subordinator draw
// used, and the stream that produced it. values is coord-major; the grid is
// shared across paths from one sampler.
struct GgbmPath {
    ModelParams params;
    std::shared_ptr<const TimeGrid> grid;
    std::vector<double> values;  // d * n, values[c * n + i]
    double tau = 1.0;
    rng::SeedSpec seed;

    std::size_t n() const { return grid ? grid->n : 0; }
    double value(int coord, std::size_t i) const { return values[coord * n() + i]; }
};

// Draws tau once per path, then d independent fBm paths scaled by sqrt(tau).
// Substream layout within a path stream: 0 = subordinator, 1+c = coordinate c.
class GgbmSampler {
  public:
    GgbmSampler(const ModelParams& params, const TimeGrid& grid,
                FbmMethod method = FbmMethod::circulant);

    GgbmPath sample(const rng::SeedSpec& seed) const;
    std::vector<GgbmPath> sample_batch(const rng::SeedSpec& base, std::size_t n_paths,
                                       int threads = 1) const;

    const ModelParams& params() const { return params_; }
    const TimeGrid& grid() const { return *grid_; }
    FbmMethod method() const { return method_; }

  private:
    ModelParams params_;
    std::shared_ptr<const TimeGrid> grid_;
    FbmMethod method_;
    std::shared_ptr<CholeskyFbmSampler> chol_;
    std::shared_ptr<CirculantFgnSampler> circ_;
};

// Runs fn(path, index) for index in [0, n_paths); work is split into fixed
// blocks claimed by threads, so results indexed by path are identical for
// any thread count.
void for_each_path(const GgbmSampler& sampler, const rng::SeedSpec& base, std::size_t n_paths,
                   int threads, const std::function<void(const GgbmPath&, std::size_t)>& fn);

// ---- statistical validators ------------------------------------------------

// component of a linear probe sum_j weight_j * X_{coord_j}(t_{index_j})
struct CfProbeTerm {
    int coord = 0;
    std::size_t time_index = 0;
    double weight = 1.0;
};
using CfProbe = std::vector<CfProbeTerm>;

struct CfStats {
    std::complex<double> mean;
    double se_re = 0.0;
    double se_im = 0.0;
    std::size_t n = 0;
};

// Streaming accumulator for exp(i * probe) over paths.
class CfAccumulator {
  public:
    explicit CfAccumulator(std::vector<CfProbe> probes);
    void add_path(const GgbmPath& path);
    void merge(const CfAccumulator& other);
    CfStats stats(std::size_t probe_idx) const;
    std::size_t probe_count() const { return probes_.size(); }

  private:
    struct Sums {
        double c = 0.0, s = 0.0, c2 = 0.0, s2 = 0.0;
        std::size_t n = 0;
    };
    std::vector<CfProbe> probes_;
    std::vector<Sums> sums_;
};

// mean and standard error of exp(i (k, B(t))) over a path collection;
// t must lie on the grid (no interpolation), |k| = d, >= 2 paths.
CfStats empirical_char_fn(const std::vector<GgbmPath>& paths, const std::vector<double>& k,
                          double t);

struct MomentReport {
    int order = 1;  // n of the 2n-th moment
    double target = 0.0;
    double even_moment = 0.0;
    double even_se = 0.0;
    double even_z = 0.0;
    double odd_moment = 0.0;
    double odd_se = 0.0;
    double odd_z = 0.0;
    std::size_t n_samples = 0;
};

// simulates <w, phi> as sqrt(tau) * N(0, phi_norm_sq) and reports the
// empirical 2n-th moment against (2n)!/(2^n Gamma(beta n + 1)) |phi|^(2n),
// plus the (2n+1)-th moment against zero
MomentReport moment_check(double beta, double phi_norm_sq, int n, std::size_t n_samples,
                          const rng::SeedSpec& seed);

struct ProbeZ {
    std::string name;
    double z_re = 0.0;
    double z_im = 0.0;
};

struct CfCompareReport {
    double max_abs_z = 0.0;
    double threshold = 4.0;
    bool pass = false;
    std::size_t n_samples = 0;
    std::vector<ProbeZ> probes;
};

// Compares the joint CF of (B(a t_1),...,B(a t_m)) against the CF of
// a^(alpha/2) (B(t_1),...,B(t_m)) on two independent path samples.
CfCompareReport self_similarity_check(const ModelParams& params, double a,
                                      const std::vector<double>& probe_times,
                                      std::size_t n_samples, const rng::SeedSpec& seed,
                                      int threads = 1);

// Compares increments shifted by h against the unshifted vector.
CfCompareReport stationary_increments_check(const ModelParams& params, double h,
                                            const std::vector<double>& probe_times,
                                            std::size_t n_samples, const rng::SeedSpec& seed,
                                            int threads = 1);

// Cholesky vs circulant two-sample CF test on a fixed probe panel; the
// threshold is Bonferroni-calibrated for an overall 1% level.
CfCompareReport sampler_cross_validation(double alpha, const TimeGrid& grid, std::size_t n_paths,
                                         const rng::SeedSpec& seed, int threads = 1);

// values/sqrt(tau) must have the fBm covariance: z-scores of pooled
// second moments against cov_kernel on a probe set of grid pairs.
CfCompareReport subordination_consistency_check(const ModelParams& params, const TimeGrid& grid,
                                                std::size_t n_paths, const rng::SeedSpec& seed,
                                                int threads = 1);

// d >= 2: coordinate permutations leave the CF unchanged; tested pathwise
// on the same sample so the difference has zero mean exactly.
CfCompareReport exchangeability_check(const ModelParams& params, const TimeGrid& grid,
                                      std::size_t n_paths, const rng::SeedSpec& seed,
                                      int threads = 1);

}  // namespace ggbm::sampler
