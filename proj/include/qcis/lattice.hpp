#pragma once

// Double-precision Weierstrass evaluation on a period lattice: p, p', zeta,
// quasi-periods and the invariants (g2, g3). Arguments are reduced to the
// Voronoi cell of an SL2(Z)-reduced basis; values come from the Laurent
// series near the origin followed by duplication steps.

#include "qcis/scalars.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qcis {

using Complex = std::complex<double>;

struct NearPole : std::domain_error {
    NearPole() : std::domain_error("evaluation point too close to a lattice point") {}
};

class Lattice {
public:
    Lattice(Complex omega1, Complex omega2) : w1_(omega1), w2_(omega2)
    {
        if (std::imag(omega2 / omega1) <= 0)
            throw std::invalid_argument("period basis must satisfy Im(omega2/omega1) > 0");
        reduce_basis();
        compute_invariants();
        compute_series_coeffs();
        eta1_ = 2.0 * chain_eval(r1_ / 2.0).zeta;
        eta2_ = 2.0 * chain_eval(r2_ / 2.0).zeta;
    }

    Complex omega1() const { return w1_; }
    Complex omega2() const { return w2_; }
    Complex g2() const { return g2_; }
    Complex g3() const { return g3_; }
    /// Quasi-periods of zeta for the original basis: zeta(z + omega_k) = zeta(z) + eta_k.
    Complex eta1() const { return quasi_period(w1_); }
    Complex eta2() const { return quasi_period(w2_); }
    double min_norm() const { return min_norm_; }

    /// Distance from z to the nearest lattice point.
    double dist(Complex z) const
    {
        Complex z0 = voronoi(z).z0;
        return std::abs(z0);
    }

    /// z = x*omega1 + y*omega2 with real coordinates (original basis).
    Complex from_unit_cell(double x, double y) const { return x * w1_ + y * w2_; }

    Complex wp(Complex z) const { return eval(z).wp; }
    Complex wp_prime(Complex z) const { return eval(z).wpp; }
    std::pair<Complex, Complex> wp_pair(Complex z) const
    {
        Values v = eval(z);
        return {v.wp, v.wpp};
    }

    /// Weierstrass zeta: odd, quasi-periodic, zeta' = -wp.
    Complex zeta(Complex z) const
    {
        Voronoi red = voronoi(z);
        if (std::abs(red.z0) < 1e-9 * scale_)
            throw NearPole();
        Values v = chain_eval(red.z0);
        return v.zeta + static_cast<double>(red.m) * eta1_ + static_cast<double>(red.n) * eta2_;
    }

private:
    struct Values {
        Complex wp, wpp, zeta;
    };
    struct Voronoi {
        Complex z0; // z - m*r1 - n*r2, nearest-point representative
        long m, n;  // in the reduced basis
    };

    void reduce_basis()
    {
        r1_ = w1_;
        r2_ = w2_;
        for (int guard = 0; guard < 128; ++guard) {
            Complex tau = r2_ / r1_;
            double shift = std::round(std::real(tau));
            if (shift != 0) {
                r2_ -= shift * r1_;
                tau = r2_ / r1_;
            }
            if (std::abs(tau) < 1.0 - 1e-14) {
                Complex t = r1_;
                r1_ = r2_;
                r2_ = -t;
                continue;
            }
            break;
        }
        scale_ = std::abs(r1_);
        min_norm_ = scale_; // shortest vector of a reduced basis
        det_ = std::real(r1_) * std::imag(r2_) - std::imag(r1_) * std::real(r2_);
    }

    // g2, g3 from the Eisenstein q-expansions on the reduced basis; with
    // Im(tau) >= sqrt(3)/2 the tail is far below 1e-12.
    void compute_invariants()
    {
        Complex tau = r2_ / r1_;
        Complex q = std::exp(Complex(0, 2 * std::numbers::pi) * tau);
        Complex e4 = 1.0, e6 = 1.0;
        Complex qn = 1.0;
        for (int n = 1; n <= 60; ++n) {
            qn *= q;
            Complex frac = qn / (1.0 - qn);
            double n3 = static_cast<double>(n) * n * n;
            e4 += 240.0 * n3 * frac;
            e6 -= 504.0 * n3 * static_cast<double>(n) * n * frac;
            if (std::abs(qn) < 1e-20)
                break;
        }
        Complex c = 2.0 * std::numbers::pi / r1_;
        Complex c2 = c * c, c4 = c2 * c2;
        g2_ = c4 * e4 / 12.0;
        g3_ = c4 * c2 * e6 / 216.0;
    }

    void compute_series_coeffs()
    {
        // wp(u) = u^-2 + sum_{k>=2} c_k u^{2k-2}
        ck_.assign(48, Complex(0));
        ck_[2] = g2_ / 20.0;
        ck_[3] = g3_ / 28.0;
        for (std::size_t k = 4; k < ck_.size(); ++k) {
            Complex s = 0;
            for (std::size_t j = 2; j + 2 <= k; ++j)
                s += ck_[j] * ck_[k - j];
            ck_[k] = s * 3.0 / ((2.0 * k + 1.0) * (k - 3.0));
        }
    }

    Voronoi voronoi(Complex z) const
    {
        double x = (std::imag(r2_) * std::real(z) - std::real(r2_) * std::imag(z)) / det_;
        double y = (-std::imag(r1_) * std::real(z) + std::real(r1_) * std::imag(z)) / det_;
        long m = std::lround(std::floor(x + 0.5));
        long n = std::lround(std::floor(y + 0.5));
        Complex z0 = z - static_cast<double>(m) * r1_ - static_cast<double>(n) * r2_;
        // step to the true nearest translate among the 3x3 neighborhood
        for (int dm = -1; dm <= 1; ++dm)
            for (int dn = -1; dn <= 1; ++dn) {
                Complex w = static_cast<double>(dm) * r1_ + static_cast<double>(dn) * r2_;
                if (std::abs(z0 - w) < std::abs(z0)) {
                    z0 -= w;
                    m += dm;
                    n += dn;
                }
            }
        return {z0, m, n};
    }

    Values local_series(Complex u) const
    {
        Complex u2 = u * u;
        Complex wp = 1.0 / u2, wpp = -2.0 / (u2 * u), zt = 1.0 / u;
        Complex upow = u2; // u^{2k-2} for k = 2
        for (std::size_t k = 2; k < ck_.size(); ++k) {
            wp += ck_[k] * upow;
            wpp += (2.0 * k - 2.0) * ck_[k] * upow / u;
            zt -= ck_[k] * upow * u / (2.0 * k - 1.0);
            upow *= u2;
        }
        return {wp, wpp, zt};
    }

    // Halve into the series region, then double back:
    //   wp(2y)  = lam^2 - 2 wp(y),           lam  = wp''/(2 wp')
    //   wp'(2y) = lam*lam' - wp'(y),         lam' = (12 wp wp'^2 - wp''^2)/(2 wp'^2)
    //   zeta(2y) = 2 zeta(y) + lam
    Values chain_eval(Complex z0) const
    {
        // A reduced-basis Voronoi representative sits within ~0.76*min_norm,
        // so one halving suffices; each duplication step cancels digits in
        // lam^2 - 2 wp, which is why the series radius is kept this large.
        int halvings = 0;
        Complex u = z0;
        while (std::abs(u) > 0.45 * min_norm_ && halvings < 40) {
            u /= 2.0;
            ++halvings;
        }
        Values v = local_series(u);
        for (int i = 0; i < halvings; ++i) {
            Complex wpp2 = 6.0 * v.wp * v.wp - g2_ / 2.0;
            Complex lam = wpp2 / (2.0 * v.wpp);
            Complex lamp = (12.0 * v.wp * v.wpp * v.wpp - wpp2 * wpp2) / (2.0 * v.wpp * v.wpp);
            Values next;
            next.wp = lam * lam - 2.0 * v.wp;
            next.wpp = lam * lamp - v.wpp;
            next.zeta = 2.0 * v.zeta + lam;
            v = next;
        }
        return v;
    }

    Values eval(Complex z) const
    {
        Voronoi red = voronoi(z);
        if (std::abs(red.z0) < 1e-9 * scale_)
            throw NearPole();
        return chain_eval(red.z0);
    }

    /// eta for an arbitrary period w = m*r1 + n*r2.
    Complex quasi_period(Complex w) const
    {
        double x = (std::imag(r2_) * std::real(w) - std::real(r2_) * std::imag(w)) / det_;
        double y = (-std::imag(r1_) * std::real(w) + std::real(r1_) * std::imag(w)) / det_;
        return std::round(x) * eta1_ + std::round(y) * eta2_;
    }

    Complex w1_, w2_; // original basis
    Complex r1_, r2_; // reduced basis
    double det_ = 0, scale_ = 0, min_norm_ = 0;
    Complex g2_, g3_;
    Complex eta1_, eta2_; // quasi-periods of the reduced basis
    std::vector<Complex> ck_;
};

inline Complex wp_eval(Complex z, const Lattice& lat) { return lat.wp(z); }
inline Complex wp_prime_eval(Complex z, const Lattice& lat) { return lat.wp_prime(z); }
inline Complex zeta_eval(Complex z, const Lattice& lat) { return lat.zeta(z); }

inline std::pair<Complex, Complex> invariants_from_periods(const Lattice& lat)
{
    return {lat.g2(), lat.g3()};
}

} // namespace qcis
