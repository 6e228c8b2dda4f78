#ifndef JUMPCREDIT_SPECIAL_FN_HPP
#define JUMPCREDIT_SPECIAL_FN_HPP

#include <jumpcredit/errors.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace jumpcredit {

    namespace detail {

        inline constexpr double kEps = std::numeric_limits<double>::epsilon();
        inline constexpr double kLogSqrt2Pi = 0.91893853320467274178032973640562;

        //! Taylor coefficients of 1/Gamma(1+x) around 0.
        inline constexpr double kRecipGammaTaylor[] = {
            1.0,
            0.5772156649015328606065121,
            -0.6558780715202538810770195,
            -0.04200263503409523552900393,
            0.1665386113822914895017008,
            -0.0421977345555443367482083,
            -0.009621971527876973562114922,
            0.00721894324666309954239501,
            -0.001165167591859065112113971,
            -0.00021524167411495097281573,
            0.0001280502823881161861531986,
            -0.00002013485478078823865568939,
            -0.000001250493482142670657345359,
            0.00000113302723198169588237413,
            -0.0000002056338416977607103450154,
            6.116095104481415817862499e-9,
            5.002007644469222930055665e-9,
            -1.181274570487020144588127e-9,
            1.04342671169110051049154e-10,
            7.782263439905071254049937e-12,
            -3.696805618642205708187816e-12,
            5.100370287454475979015481e-13,
            -2.05832605356650678322243e-14,
            -5.348122539423017982370017e-15,
            1.226778628238260790158894e-15,
            -1.181259301697458769513765e-16,
            1.186692254751600332579777e-18,
            1.412380655318031781555804e-18,
            -2.298745684435370206592479e-19,
            1.714406321927337433383963e-20,
            1.337351730493693114864781e-22,
        };

        //! sin(pi x) with the argument reduced first so integers give exact zeros.
        inline double sin_pi(double x) {
            const double n = std::nearbyint(x);
            const double r = x - n;  // |r| <= 1/2, exact
            const double s = std::sin(std::numbers::pi * r);
            return std::fmod(n, 2.0) == 0.0 ? s : -s;
        }

        //! Remainder of the Stirling series: lgamma(a) - [(a-1/2)ln a - a + ln sqrt(2 pi)].
        inline double stirling_remainder(double a);

        //! ln|Gamma(x)| for x > 0 via upward shift and Stirling series.
        inline double log_gamma_positive(double x) {
            double shift = 0.0;
            double z = x;
            if (z < 10.0) {
                double prod = 1.0;
                while (z < 10.0) {
                    prod *= z;
                    z += 1.0;
                }
                shift = std::log(prod);
            }
            return (z - 0.5) * std::log(z) - z + kLogSqrt2Pi + stirling_remainder(z) - shift;
        }

        inline double stirling_remainder(double a) {
            if (a >= 10.0) {
                const double r = 1.0 / a;
                const double r2 = r * r;
                // Bernoulli terms B_{2k}/(2k(2k-1) a^{2k-1}), k = 1..8
                return r * (1.0 / 12.0
                     + r2 * (-1.0 / 360.0
                     + r2 * (1.0 / 1260.0
                     + r2 * (-1.0 / 1680.0
                     + r2 * (1.0 / 1188.0
                     + r2 * (-691.0 / 360360.0
                     + r2 * (1.0 / 156.0
                     + r2 * (-3617.0 / 122400.0))))))));
            }
            return log_gamma_positive(a) - ((a - 0.5) * std::log(a) - a + kLogSqrt2Pi);
        }

        //! log(1+x) - x without cancellation for small |x|.
        inline double log1pmx(double x) {
            if (std::fabs(x) > 0.5) return std::log1p(x) - x;
            // -x^2/2 + x^3/3 - ...
            double term = x;
            double sum = 0.0;
            for (int k = 2; k < 200; ++k) {
                term *= -x;
                const double d = term / k;
                sum += d;
                if (std::fabs(d) <= kEps * std::fabs(sum)) break;
            }
            return sum;
        }

        //! log of z^a e^{-z} / Gamma(a), the common prefactor of the incomplete gammas.
        inline double log_gamma_prefactor(double a, double z) {
            if (a < 10.0) return a * std::log(z) - z - log_gamma_positive(a);
            const double t = (z - a) / a;
            return a * log1pmx(t) + 0.5 * std::log(a) - kLogSqrt2Pi - stirling_remainder(a);
        }

        inline void check_gamma_args(double a, double z, const char* name) {
            if (!(a > 0.0) || !(z >= 0.0) || std::isnan(z))
                throw DomainError(std::string(name) + ": need a > 0 and z >= 0");
        }

        //! P(a,z) by the power series; valid for z < a + 1.
        inline double lower_gamma_series(double a, double z) {
            double term = 1.0 / a;
            double sum = term;
            double ap = a;
            for (int n = 1; n < 100000; ++n) {
                ap += 1.0;
                term *= z / ap;
                sum += term;
                if (term < sum * kEps) {
                    return sum * std::exp(log_gamma_prefactor(a, z));
                }
            }
            throw DomainError("reg_lower_gamma: series did not converge");
        }

        //! Q(a,z) by the Legendre continued fraction (modified Lentz); valid for z >= a + 1.
        inline double upper_gamma_cf(double a, double z) {
            constexpr double tiny = 1e-300;
            double b = z + 1.0 - a;
            double c = 1.0 / tiny;
            double d = 1.0 / b;
            double h = d;
            for (int i = 1; i < 100000; ++i) {
                const double an = -i * (i - a);
                b += 2.0;
                d = an * d + b;
                if (std::fabs(d) < tiny) d = tiny;
                c = b + an / c;
                if (std::fabs(c) < tiny) c = tiny;
                d = 1.0 / d;
                const double del = d * c;
                h *= del;
                if (std::fabs(del - 1.0) < kEps) {
                    return h * std::exp(log_gamma_prefactor(a, z));
                }
            }
            throw DomainError("reg_upper_gamma: continued fraction did not converge");
        }

    }

    //! ln|Gamma(x)|; optional sign of Gamma(x). Poles give +inf.
    inline double log_abs_gamma(double x, int* sign = nullptr) {
        if (sign) *sign = 1;
        if (std::isnan(x)) return x;
        if (x > 0.0) return detail::log_gamma_positive(x);
        if (x == std::nearbyint(x)) return std::numeric_limits<double>::infinity();
        // Gamma(x) = pi / (sin(pi x) Gamma(1-x))
        const double s = detail::sin_pi(x);
        if (sign) *sign = s < 0.0 ? -1 : 1;
        return std::log(std::numbers::pi) - std::log(std::fabs(s)) - detail::log_gamma_positive(1.0 - x);
    }

    //! 1/Gamma(x), exact zero at the poles.
    inline double reciprocal_gamma(double x) {
        if (x <= 0.0 && x == std::nearbyint(x)) return 0.0;
        int sign = 1;
        const double lg = log_abs_gamma(x, &sign);
        return sign * std::exp(-lg);
    }

    inline double reg_lower_gamma(double a, double z) {
        detail::check_gamma_args(a, z, "reg_lower_gamma");
        if (z == 0.0) return 0.0;
        if (std::isinf(z)) return 1.0;
        if (z < a + 1.0) return std::min(1.0, detail::lower_gamma_series(a, z));
        return std::clamp(1.0 - detail::upper_gamma_cf(a, z), 0.0, 1.0);
    }

    inline double reg_upper_gamma(double a, double z) {
        detail::check_gamma_args(a, z, "reg_upper_gamma");
        if (z == 0.0) return 1.0;
        if (std::isinf(z)) return 0.0;
        if (z < a + 1.0) return std::clamp(1.0 - detail::lower_gamma_series(a, z), 0.0, 1.0);
        return std::min(1.0, detail::upper_gamma_cf(a, z));
    }

    inline double std_normal_pdf(double x) {
        return std::exp(-0.5 * x * x - detail::kLogSqrt2Pi);
    }

    inline double std_normal_cdf(double x) {
        return 0.5 * std::erfc(-x * std::numbers::sqrt2 / 2.0);
    }

    //! log N(x), accurate far into the lower tail.
    inline double log_std_normal_cdf(double x) {
        if (x > 0.0) return std::log1p(-0.5 * std::erfc(x * std::numbers::sqrt2 / 2.0));
        if (x > -5.0) return std::log(std_normal_cdf(x));
        // N(x) = pdf(x) * R(-x), Mills ratio by its continued fraction t/(t^2+1-) ...
        const double t = -x;
        constexpr double tiny = 1e-300;
        double f = t;
        double c = t;
        double d = 0.0;
        for (int i = 1; i < 500; ++i) {
            d = t + i * d;
            if (std::fabs(d) < tiny) d = tiny;
            c = t + i / c;
            if (std::fabs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double del = c * d;
            f *= del;
            if (std::fabs(del - 1.0) < detail::kEps) break;
        }
        return -0.5 * x * x - detail::kLogSqrt2Pi - std::log(f);
    }

    //! N^{-1}(p): rational start, then Halley steps on the erfc-based CDF.
    inline double inverse_std_normal_cdf(double p) {
        if (!(p > 0.0 && p < 1.0)) {
            if (p == 0.0) return -std::numeric_limits<double>::infinity();
            if (p == 1.0) return std::numeric_limits<double>::infinity();
            throw DomainError("inverse_std_normal_cdf: p outside [0,1]");
        }
        static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                       -2.759285104469687e+02, 1.383577518672690e+02,
                                       -3.066479806614716e+01, 2.506628277459239e+00};
        static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                       -1.556989798598866e+02, 6.680131188771972e+01,
                                       -1.328068155288572e+01};
        static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                       -2.400758277161838e+00, -2.549732539343734e+00,
                                       4.374664141464968e+00, 2.938163982698783e+00};
        static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                       2.445134137142996e+00, 3.754408661907416e+00};
        constexpr double plow = 0.02425;
        double x;
        if (p < plow) {
            const double q = std::sqrt(-2.0 * std::log(p));
            x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        } else if (p <= 1.0 - plow) {
            const double q = p - 0.5;
            const double r = q * q;
            x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
                / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
        } else {
            const double q = std::sqrt(-2.0 * std::log1p(-p));
            x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
        }
        // refine against whichever tail keeps relative precision
        for (int it = 0; it < 2; ++it) {
            double e;
            if (p < 0.5) {
                e = std_normal_cdf(x) - p;
            } else {
                e = (1.0 - p) - std_normal_cdf(-x);
            }
            const double u = e / std_normal_pdf(x);
            x -= u / (1.0 + 0.5 * x * u);
        }
        return x;
    }

    namespace detail {

        //! K_mu(x), K_{mu+1}(x) for |mu| <= 1/2, scaled by e^{x} when x >= 2.
        inline void bessel_k_base(double mu, double x, double& kmu, double& kmu1) {
            if (x < 2.0) {
                // Temme's series
                const double x2 = 0.5 * x;
                const double pimu = std::numbers::pi * mu;
                const double fact = std::fabs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
                double d = -std::log(x2);
                double e = mu * d;
                const double fact2 = std::fabs(e) < kEps ? 1.0 : std::sinh(e) / e;
                double gam1 = 0.0;  // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
                double gam2 = 0.0;  // (1/G(1-mu) + 1/G(1+mu)) / 2
                {
                    double pw = 1.0;
                    constexpr int n = sizeof(kRecipGammaTaylor) / sizeof(double);
                    for (int k = 0; k < n; ++k) {
                        if (k % 2 == 0) {
                            gam2 += kRecipGammaTaylor[k] * pw;
                        } else {
                            gam1 -= kRecipGammaTaylor[k] * pw;
                            pw *= mu * mu;
                        }
                    }
                }
                const double odd_part = -gam1 * mu;  // (f(mu) - f(-mu)) / 2
                const double gampl = gam2 + odd_part;  // 1/Gamma(1+mu)
                const double gammi = gam2 - odd_part;  // 1/Gamma(1-mu)
                double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
                double sum = ff;
                e = std::exp(e);
                double p = 0.5 * e / gampl;
                double q = 0.5 / (e * gammi);
                double c = 1.0;
                d = x2 * x2;
                double sum1 = p;
                for (int i = 1; i < 10000; ++i) {
                    ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu * mu);
                    c *= d / i;
                    p /= i - mu;
                    q /= i + mu;
                    const double del = c * ff;
                    sum += del;
                    sum1 += c * (p - i * ff);
                    if (std::fabs(del) < std::fabs(sum) * kEps) break;
                }
                kmu = sum;
                kmu1 = sum1 * (2.0 / x);
                return;
            }
            // Steed's continued fraction CF2
            double b = 2.0 * (1.0 + x);
            double d = 1.0 / b;
            double h = d;
            double delh = d;
            double q1 = 0.0;
            double q2 = 1.0;
            const double a1 = 0.25 - mu * mu;
            double q = a1;
            double c = a1;
            double a = -a1;
            double s = 1.0 + q * delh;
            for (int i = 1; i < 100000; ++i) {
                a -= 2 * i;
                c = -a * c / (i + 1.0);
                const double qnew = (q1 - b * q2) / a;
                q1 = q2;
                q2 = qnew;
                q += c * qnew;
                b += 2.0;
                d = 1.0 / (b + a * d);
                delh = (b * d - 1.0) * delh;
                h += delh;
                const double dels = q * delh;
                s += dels;
                if (std::fabs(dels / s) < kEps) break;
            }
            h = a1 * h;
            kmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
            kmu1 = kmu * (mu + x + 0.5 - h) / x;
        }

    }

    //! ln K_nu(x) for x > 0, any real order; finite wherever K_nu(x) itself would overflow.
    inline double log_bessel_k(double order, double x) {
        if (!(x > 0.0)) throw DomainError("bessel_k: argument must be positive");
        if (std::isinf(x)) return -std::numeric_limits<double>::infinity();
        const double nu = std::fabs(order);
        // leading small-argument term; corrections are O(x^{2 min(nu, 1)}), negligible here
        if (nu >= 0.5 && x < 1e-100)
            return log_abs_gamma(nu) + (nu - 1.0) * std::numbers::ln2 - nu * std::log(x);
        const double n = std::floor(nu + 0.5);
        const double mu = nu - n;
        double k0 = 0.0;
        double k1 = 0.0;
        detail::bessel_k_base(mu, x, k0, k1);
        double log_scale = x >= 2.0 ? -x : 0.0;
        const double two_over_x = 2.0 / x;
        for (int i = 1; i <= static_cast<int>(n); ++i) {
            const double factor = (mu + i) * two_over_x;
            if (k1 > 1e280 / std::max(factor, 1.0)) {
                // rescale before the step can overflow (tiny x makes factor huge)
                const double s = k1;
                k0 /= s;
                k1 = 1.0;
                log_scale += std::log(s);
            }
            const double k2 = factor * k1 + k0;
            k0 = k1;
            k1 = k2;
        }
        return std::log(k0) + log_scale;
    }

    inline double bessel_k(double order, double x) {
        const double lk = log_bessel_k(order, x);
        if (lk > std::log(std::numeric_limits<double>::max()))
            throw OverflowError("bessel_k: result exceeds the double range");
        return std::exp(lk);
    }

    //! N(A) + e^{2 lt/m} N(-B): the inverse Gaussian CDF with mean mu t and shape lambda t^2.
    inline double shuster_phi(double x, double t, double lambda, double mu) {
        if (!(x > 0.0 && t > 0.0 && lambda > 0.0 && mu > 0.0))
            throw DomainError("shuster_phi: arguments must be positive");
        if (std::isinf(x)) return 1.0;
        const double s = t * std::sqrt(lambda / x);
        const double r = x / (mu * t);
        const double first = std_normal_cdf(s * (r - 1.0));
        const double second = std::exp(2.0 * lambda * t / mu + log_std_normal_cdf(-s * (r + 1.0)));
        return std::clamp(first + second, 0.0, 1.0);
    }

    //! 1 - shuster_phi, computed without subtracting from 1.
    inline double shuster_phi_complement(double x, double t, double lambda, double mu) {
        if (!(x > 0.0 && t > 0.0 && lambda > 0.0 && mu > 0.0))
            throw DomainError("shuster_phi: arguments must be positive");
        if (std::isinf(x)) return 0.0;
        const double s = t * std::sqrt(lambda / x);
        const double r = x / (mu * t);
        const double l1 = log_std_normal_cdf(-s * (r - 1.0));
        const double l2 = 2.0 * lambda * t / mu + log_std_normal_cdf(-s * (r + 1.0));
        if (l2 >= l1) return 0.0;
        return std::clamp(-std::exp(l1) * std::expm1(l2 - l1), 0.0, 1.0);
    }

}

#endif
