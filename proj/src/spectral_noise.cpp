#include "spmlab/spectral_noise.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <stdexcept>

#include "spmlab/fft.hpp"
#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"

namespace spmlab {

namespace {

constexpr std::uint64_t kMagic = 0x53504d4e4f495345ULL;  // "SPMNOISE"

bool canonical_half(int j1, int j2) { return j1 > 0 || (j1 == 0 && j2 > 0); }

// Euclidean cutoff |j| <= K, matching the counterterm mode sums.
bool inside_disc(int j1, int j2, int K) { return j1 * j1 + j2 * j2 <= K * K; }

}  // namespace

std::size_t SpectralNoise::mode_index(int j1, int j2) const {
    const int side = 2 * K_max_ + 1;
    if (d_ == 1) return static_cast<std::size_t>(j1 + K_max_);
    return static_cast<std::size_t>(j1 + K_max_) * side + (j2 + K_max_);
}

SpectralNoise SpectralNoise::sample_space_white(int d, int K_max, std::uint64_t seed) {
    if (d != 1 && d != 2) throw std::invalid_argument("sample_space_white: d must be 1 or 2");
    if (K_max < 1) throw std::invalid_argument("sample_space_white: K_max must be >= 1");
    SpectralNoise noise;
    noise.kind_ = NoiseKind::SpaceWhite;
    noise.d_ = d;
    noise.K_max_ = K_max;
    noise.seed_ = seed;
    const int side = 2 * K_max + 1;
    noise.coeffs_.assign(d == 1 ? side : static_cast<std::size_t>(side) * side, {0.0, 0.0});

    const int j2_lo = d == 2 ? -K_max : 0;
    const int j2_hi = d == 2 ? K_max : 0;
    for (int j1 = -K_max; j1 <= K_max; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            if (!inside_disc(j1, j2, K_max)) continue;
            if (j1 == 0 && j2 == 0) {
                CounterRng rng(seed, mode_key(0, 0));
                noise.coeffs_[noise.mode_index(0, 0)] = {rng.next_normal(), 0.0};
            } else if (canonical_half(j1, j2)) {
                CounterRng rng(seed, mode_key(j1, j2));
                const auto [re, im] = rng.next_complex_gaussian();
                noise.coeffs_[noise.mode_index(j1, j2)] = {re, im};
                noise.coeffs_[noise.mode_index(-j1, -j2)] = {re, -im};
            }
        }
    }
    return noise;
}

SpectralNoise SpectralNoise::sample_coloured(int d, int K_max, double alpha_prime,
                                             double mollifier_eps, double path_dt, int path_steps,
                                             std::uint64_t seed) {
    if (d != 1 && d != 2) throw std::invalid_argument("sample_coloured: d must be 1 or 2");
    if (!(alpha_prime > 2.0 / 3.0 && alpha_prime < 1.0)) {
        throw std::invalid_argument("sample_coloured: alpha_prime must lie in (2/3, 1)");
    }
    if (!(mollifier_eps > 0.0)) throw std::invalid_argument("sample_coloured: mollifier_eps must be positive");
    if (path_dt > mollifier_eps / 4.0) {
        throw std::invalid_argument("sample_coloured: path step under-resolves the mollifier (need dt <= eps/4)");
    }
    if (path_steps < 1) throw std::invalid_argument("sample_coloured: path_steps must be >= 1");

    SpectralNoise noise;
    noise.kind_ = NoiseKind::Coloured;
    noise.d_ = d;
    noise.K_max_ = K_max;
    noise.seed_ = seed;
    noise.alpha_prime_ = alpha_prime;
    noise.mollifier_eps_ = mollifier_eps;
    noise.path_dt_ = path_dt;
    noise.path_steps_ = path_steps;
    // pad so the mollifier window never runs off the stored path
    noise.path_pad_ = static_cast<int>(std::ceil(mollifier_eps / path_dt)) + 1;

    const int side = 2 * K_max + 1;
    const std::size_t modes = d == 1 ? side : static_cast<std::size_t>(side) * side;
    const std::size_t total_steps = path_steps + 2 * noise.path_pad_;
    noise.increments_.assign(modes * total_steps, {0.0, 0.0});

    const double scale = std::sqrt(path_dt);
    const int j2_lo = d == 2 ? -K_max : 0;
    const int j2_hi = d == 2 ? K_max : 0;
    for (int j1 = -K_max; j1 <= K_max; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            if (!inside_disc(j1, j2, K_max)) continue;
            if (!(j1 == 0 && j2 == 0) && !canonical_half(j1, j2)) continue;
            CounterRng rng(seed, mode_key(j1, j2));
            const std::size_t base = noise.mode_index(j1, j2) * total_steps;
            const std::size_t mirror =
                (j1 == 0 && j2 == 0) ? base : noise.mode_index(-j1, -j2) * total_steps;
            for (std::size_t i = 0; i < total_steps; ++i) {
                if (j1 == 0 && j2 == 0) {
                    noise.increments_[base + i] = {scale * rng.next_normal(), 0.0};
                } else {
                    const auto [re, im] = rng.next_complex_gaussian();
                    noise.increments_[base + i] = {scale * re, scale * im};
                    noise.increments_[mirror + i] = {scale * re, -scale * im};
                }
            }
        }
    }
    return noise;
}

SpectralNoise SpectralNoise::from_coefficients(int d, int K_max,
                                               std::span<const std::complex<double>> coeffs) {
    if (d != 1 && d != 2) throw std::invalid_argument("from_coefficients: d must be 1 or 2");
    const int side = 2 * K_max + 1;
    const std::size_t expected = d == 1 ? side : static_cast<std::size_t>(side) * side;
    if (coeffs.size() != expected) throw std::invalid_argument("from_coefficients: bad coefficient count");
    SpectralNoise noise;
    noise.kind_ = NoiseKind::SpaceWhite;
    noise.d_ = d;
    noise.K_max_ = K_max;
    noise.coeffs_.assign(coeffs.begin(), coeffs.end());
    const int j2_lo = d == 2 ? -K_max : 0;
    const int j2_hi = d == 2 ? K_max : 0;
    for (int j1 = -K_max; j1 <= K_max; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            const auto c = noise.coeffs_[noise.mode_index(j1, j2)];
            const auto m = noise.coeffs_[noise.mode_index(-j1, -j2)];
            if (std::abs(c.real() - m.real()) > 1e-14 || std::abs(c.imag() + m.imag()) > 1e-14) {
                throw std::invalid_argument("from_coefficients: coefficients are not Hermitian");
            }
        }
    }
    return noise;
}

std::complex<double> SpectralNoise::coefficient(int j1, int j2) const {
    if (kind_ != NoiseKind::SpaceWhite) throw std::logic_error("coefficient: SpaceWhite only");
    if (std::abs(j1) > K_max_ || std::abs(j2) > K_max_) return {0.0, 0.0};
    return coeffs_[mode_index(j1, j2)];
}

double SpectralNoise::colour_weight(int j1, int j2) const {
    if (kind_ == NoiseKind::SpaceWhite) return 1.0;
    const double kn = 2.0 * M_PI * std::sqrt(static_cast<double>(j1) * j1 + static_cast<double>(j2) * j2);
    return std::pow(1.0 + kn, -(d_ - 2.0 + 2.0 * alpha_prime_));
}

double SpectralNoise::mollifier_rho(double s) {
    static const double norm =
        integrate_gl([](double w) { return std::exp(1.0 / (w * w - 1.0)); }, -1.0, 1.0, 64);
    if (std::abs(s) >= 1.0) return 0.0;
    return std::exp(1.0 / (s * s - 1.0)) / norm;
}

std::complex<double> SpectralNoise::mollified_amplitude(int j1, int j2, double t) const {
    if (kind_ != NoiseKind::Coloured) throw std::logic_error("mollified_amplitude: Coloured only");
    const std::size_t total_steps = path_steps_ + 2 * path_pad_;
    const std::size_t base = mode_index(j1, j2) * total_steps;
    // dB^(eps)(t) = sum_i rho_eps(t - r_i) dB_i with r_i the increment nodes
    const int i_lo = std::max(0, static_cast<int>(std::floor((t - mollifier_eps_) / path_dt_)) + path_pad_);
    const int i_hi = std::min(static_cast<int>(total_steps) - 1,
                              static_cast<int>(std::ceil((t + mollifier_eps_) / path_dt_)) + path_pad_);
    std::complex<double> sum{0.0, 0.0};
    for (int i = i_lo; i <= i_hi; ++i) {
        const double r = (i - path_pad_) * path_dt_;
        const double w = mollifier_rho((t - r) / mollifier_eps_) / mollifier_eps_;
        if (w != 0.0) sum += w * increments_[base + i];
    }
    return sum;
}

std::complex<double> SpectralNoise::integrated_mode(int j1, int j2, int step) const {
    if (kind_ != NoiseKind::Coloured) throw std::logic_error("integrated_mode: Coloured only");
    if (step < 0 || step > path_steps_) throw std::out_of_range("integrated_mode: step outside path");
    const std::size_t total_steps = path_steps_ + 2 * path_pad_;
    const std::size_t base = mode_index(j1, j2) * total_steps;
    std::complex<double> sum{0.0, 0.0};
    for (int i = 0; i < step; ++i) sum += increments_[base + path_pad_ + i];
    return std::sqrt(colour_weight(j1, j2)) * sum;
}

double SpectralNoise::evaluate(const SpaceTimePoint& p) const {
    if (kind_ == NoiseKind::Coloured && (p.t < 0.0 || p.t > time_span())) {
        throw std::out_of_range("evaluate: time outside the sampled path span");
    }
    const int j2_lo = d_ == 2 ? -K_max_ : 0;
    const int j2_hi = d_ == 2 ? K_max_ : 0;
    PairwiseAccumulator acc;
    for (int j1 = -K_max_; j1 <= K_max_; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            std::complex<double> c;
            if (kind_ == NoiseKind::SpaceWhite) {
                c = coeffs_[mode_index(j1, j2)];
            } else {
                c = std::sqrt(colour_weight(j1, j2)) * mollified_amplitude(j1, j2, p.t);
            }
            const double phase = 2.0 * M_PI * (j1 * p.x[0] + j2 * p.x[1]);
            acc.add(c.real() * std::cos(phase) - c.imag() * std::sin(phase));
        }
    }
    return acc.total();
}

void SpectralNoise::fill_spectrum(double t, std::vector<std::complex<double>>& spec, int n) const {
    const int j2_lo = d_ == 2 ? -K_max_ : 0;
    const int j2_hi = d_ == 2 ? K_max_ : 0;
    for (int j1 = -K_max_; j1 <= K_max_; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            std::complex<double> c;
            if (kind_ == NoiseKind::SpaceWhite) {
                c = coeffs_[mode_index(j1, j2)];
            } else {
                c = std::sqrt(colour_weight(j1, j2)) * mollified_amplitude(j1, j2, t);
            }
            const int i1 = (j1 % n + n) % n;
            const int i2 = (j2 % n + n) % n;
            spec[d_ == 1 ? i1 : static_cast<std::size_t>(i1) * n + i2] += c;
        }
    }
}

void SpectralNoise::render_slice(double t, const Grid& grid, std::span<double> out) const {
    if (grid.d != d_) throw std::invalid_argument("render_slice: dimension mismatch");
    if (grid.n <= 2 * K_max_) throw std::invalid_argument("render_slice: grid does not resolve the cutoff");
    if (out.size() != grid.points_per_slice()) throw std::invalid_argument("render_slice: bad output size");
    if (kind_ == NoiseKind::Coloured && (t < 0.0 || t > time_span())) {
        throw std::out_of_range("render_slice: time outside the sampled path span");
    }
    std::vector<std::complex<double>> spec(grid.points_per_slice(), {0.0, 0.0});
    fill_spectrum(t, spec, grid.n);
    inverse_fft(spec.data(), d_, grid.n, out.data());
}

double SpectralNoise::coefficient_energy() const {
    PairwiseAccumulator acc;
    for (const auto& c : coeffs_) acc.add(std::norm(c));
    return acc.total();
}

void SpectralNoise::save(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("save: cannot open " + path);
    const std::uint64_t magic = kMagic;
    const std::int32_t kind = kind_ == NoiseKind::SpaceWhite ? 0 : 1;
    const std::int32_t d = d_, K = K_max_, steps = path_steps_, pad = path_pad_;
    std::fwrite(&magic, sizeof magic, 1, f);
    std::fwrite(&kind, sizeof kind, 1, f);
    std::fwrite(&d, sizeof d, 1, f);
    std::fwrite(&K, sizeof K, 1, f);
    std::fwrite(&seed_, sizeof seed_, 1, f);
    std::fwrite(&alpha_prime_, sizeof alpha_prime_, 1, f);
    std::fwrite(&mollifier_eps_, sizeof mollifier_eps_, 1, f);
    std::fwrite(&path_dt_, sizeof path_dt_, 1, f);
    std::fwrite(&steps, sizeof steps, 1, f);
    std::fwrite(&pad, sizeof pad, 1, f);
    const std::uint64_t nc = coeffs_.size(), ni = increments_.size();
    std::fwrite(&nc, sizeof nc, 1, f);
    std::fwrite(&ni, sizeof ni, 1, f);
    if (nc) std::fwrite(coeffs_.data(), sizeof(std::complex<double>), nc, f);
    if (ni) std::fwrite(increments_.data(), sizeof(std::complex<double>), ni, f);
    std::fclose(f);
}

SpectralNoise SpectralNoise::load(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("load: cannot open " + path);
    auto read = [&](void* p, std::size_t sz, std::size_t n) {
        if (std::fread(p, sz, n, f) != n) {
            std::fclose(f);
            throw std::runtime_error("load: truncated noise file " + path);
        }
    };
    std::uint64_t magic = 0;
    read(&magic, sizeof magic, 1);
    if (magic != kMagic) {
        std::fclose(f);
        throw std::runtime_error("load: not a noise dump: " + path);
    }
    SpectralNoise noise;
    std::int32_t kind = 0, d = 0, K = 0, steps = 0, pad = 0;
    read(&kind, sizeof kind, 1);
    read(&d, sizeof d, 1);
    read(&K, sizeof K, 1);
    read(&noise.seed_, sizeof noise.seed_, 1);
    read(&noise.alpha_prime_, sizeof noise.alpha_prime_, 1);
    read(&noise.mollifier_eps_, sizeof noise.mollifier_eps_, 1);
    read(&noise.path_dt_, sizeof noise.path_dt_, 1);
    read(&steps, sizeof steps, 1);
    read(&pad, sizeof pad, 1);
    noise.kind_ = kind == 0 ? NoiseKind::SpaceWhite : NoiseKind::Coloured;
    noise.d_ = d;
    noise.K_max_ = K;
    noise.path_steps_ = steps;
    noise.path_pad_ = pad;
    std::uint64_t nc = 0, ni = 0;
    read(&nc, sizeof nc, 1);
    read(&ni, sizeof ni, 1);
    noise.coeffs_.resize(nc);
    noise.increments_.resize(ni);
    if (nc) read(noise.coeffs_.data(), sizeof(std::complex<double>), nc);
    if (ni) read(noise.increments_.data(), sizeof(std::complex<double>), ni);
    std::fclose(f);
    return noise;
}

}  // namespace spmlab
